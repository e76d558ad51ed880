/** Application shell: holds the latest server status plus pending ballot
 *  entry, and re-renders from scratch on every change.  All mutations go
 *  through the service; nothing is tallied locally. */

import { ConflictError, RequestError, SessionClient } from './api.js';
import { buildSessionView, INVALID_CHOICE } from './model.js';
import { renderSession, renderWizard } from './render.js';
import type { CreateSessionWire, SessionStatusWire } from './types.js';

const STORAGE_KEY = 'clipaudit-session-id';

export class App {
    status: SessionStatusWire | null = null;
    error: string | null = null;
    /** interpretations chosen so far for the announced ballot */
    pending: Record<string, string> = {};
    private chain: Promise<void> = Promise.resolve();
    private pollTimer: ReturnType<typeof setInterval> | null = null;

    constructor(
        private root: HTMLElement,
        private client: SessionClient,
    ) {
        root.addEventListener('click', (ev) => this.onClick(ev));
        root.addEventListener('submit', (ev) => this.onSubmit(ev));
        this.render();
    }

    /** tests await this to settle any in-flight server round-trip */
    flush(): Promise<void> {
        return this.chain;
    }

    private enqueue(work: () => Promise<void>): Promise<void> {
        this.chain = this.chain.then(work, work);
        return this.chain;
    }

    // -- wiring ------------------------------------------------------------

    private onClick(ev: Event): void {
        const target = (ev.target as HTMLElement).closest('[data-action]');
        if (!(target instanceof HTMLElement)) return;
        if (target.dataset.action === 'submit-choice') {
            ev.preventDefault();
            const choice = target.dataset.choice ?? INVALID_CHOICE;
            void this.chooseForCurrentContest(choice);
        }
    }

    private onSubmit(ev: Event): void {
        const form = ev.target as HTMLFormElement;
        if (form.dataset.action !== 'create-session') return;
        ev.preventDefault();
        void this.createFromForm(new FormData(form));
    }

    /** keyboard-first entry: digit keys map to the rendered choices */
    pressKey(key: string): void {
        const button = this.root.querySelector(`[data-action="submit-choice"][data-hotkey="${key}"]`);
        if (button instanceof HTMLElement) {
            const choice = button.dataset.choice ?? INVALID_CHOICE;
            void this.chooseForCurrentContest(choice);
        }
    }

    // -- actions ------------------------------------------------------------

    async start(sessionId: string): Promise<void> {
        await this.enqueue(async () => {
            try {
                this.setStatus(await this.client.getStatus(sessionId));
            } catch (err) {
                this.error = describe(err);
                this.status = null;
                this.render();
            }
        });
    }

    async createFromForm(form: FormData): Promise<void> {
        let body: CreateSessionWire;
        try {
            body = requestFromForm(form);
        } catch (err) {
            this.error = describe(err);
            this.render();
            return;
        }
        await this.createSession(body);
    }

    async createSession(body: CreateSessionWire): Promise<void> {
        await this.enqueue(async () => {
            try {
                this.setStatus(await this.client.createSession(body));
                this.error = null;
                remember(this.status!.session_id);
            } catch (err) {
                this.error = describe(err);
                this.render();
            }
        });
    }

    async chooseForCurrentContest(choice: string): Promise<void> {
        await this.enqueue(async () => {
            if (!this.status || !this.status.next) return;
            const next = this.status.next;
            const contest = next.contests.find((c) => !(c in this.pending));
            if (contest === undefined) return;
            this.pending[contest] = choice;
            const unanswered = next.contests.filter((c) => !(c in this.pending));
            if (unanswered.length > 0) {
                this.render();
                return;
            }
            const interpretations = { ...this.pending };
            try {
                this.setStatus(
                    await this.client.submitInterpretation(
                        this.status.session_id,
                        next.sequence_no,
                        next.ballot_id,
                        interpretations,
                    ),
                );
                this.error = null;
            } catch (err) {
                if (err instanceof ConflictError) {
                    // someone else moved the session forward: adopt the
                    // server's state (or fetch it) and re-render
                    this.error = null;
                    if (err.state) {
                        this.setStatus(err.state);
                    } else {
                        this.setStatus(await this.client.getStatus(this.status!.session_id));
                    }
                } else {
                    this.error = describe(err);
                    this.pending = {};
                    this.render();
                }
            }
        });
    }

    async refresh(): Promise<void> {
        await this.enqueue(async () => {
            if (!this.status) return;
            this.setStatus(await this.client.getStatus(this.status.session_id));
        });
    }

    startPolling(intervalMs = 1500): void {
        if (this.pollTimer !== null) return;
        this.pollTimer = setInterval(() => {
            void this.pollOnce();
        }, intervalMs);
    }

    async pollOnce(): Promise<void> {
        await this.enqueue(async () => {
            if (!this.status) return;
            const current = this.status;
            const events = await this.client.getEvents(
                current.session_id,
                current.last_sequence_no,
            );
            if (events.last_sequence_no > current.last_sequence_no) {
                this.setStatus(await this.client.getStatus(current.session_id));
            }
        });
    }

    // -- state -------------------------------------------------------------

    private setStatus(status: SessionStatusWire): void {
        const previousSeq = this.status?.next?.sequence_no;
        this.status = status;
        if (status.next?.sequence_no !== previousSeq) {
            this.pending = {};
        }
        this.render();
    }

    private render(): void {
        if (this.status === null) {
            this.root.innerHTML = renderWizard(this.error);
            return;
        }
        const view = buildSessionView(this.status);
        this.root.innerHTML =
            (this.error ? `<p class="error" data-field="error">${this.error}</p>` : '') +
            renderSession(view);
    }
}

function requestFromForm(form: FormData): CreateSessionWire {
    const alpha = Number(form.get('alpha'));
    const seed = Number(form.get('seed'));
    const body: CreateSessionWire = { alpha, seed };
    const source = String(form.get('beta_source') ?? 'table');
    const beta = String(form.get('beta') ?? '').trim();
    if (beta !== '') {
        body.beta = Number(beta);
    } else {
        body.beta_source = source;
    }
    if (String(form.get('mode')) === 'manifest') {
        body.manifest_csv = String(form.get('manifest_csv') ?? '');
        body.contests = JSON.parse(String(form.get('contests_json') || '[]'));
    } else {
        const counts: Record<string, number> = {};
        let total = 0;
        for (const part of String(form.get('counts') ?? '').split(',')) {
            const [name, value] = part.split(':').map((s) => s.trim());
            if (!name || !value || !Number.isFinite(Number(value))) {
                throw new Error(`bad counts entry "${part.trim()}"`);
            }
            counts[name] = Number(value);
            total += Number(value);
        }
        body.synthetic = {
            n: total,
            exact_counts: counts,
            contest_id: String(form.get('contest_id') || 'contest-1'),
            seed,
        };
    }
    return body;
}

function describe(err: unknown): string {
    if (err instanceof RequestError) {
        if (Array.isArray(err.detail)) {
            return err.detail
                .map((d: any) => `${(d.loc ?? []).join('.')}: ${d.msg}`)
                .join('; ');
        }
        return String(err.detail);
    }
    return err instanceof Error ? err.message : String(err);
}

function remember(sessionId: string): void {
    try {
        localStorage.setItem(STORAGE_KEY, sessionId);
    } catch {
        // storage unavailable (tests, private mode): resume is best-effort
    }
}

export function rememberedSession(): string | null {
    try {
        return localStorage.getItem(STORAGE_KEY);
    } catch {
        return null;
    }
}
