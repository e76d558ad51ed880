/** Thin fetch client for the session service; no state, no recomputation. */

import type {
    CreateSessionWire,
    ExportWire,
    SessionStatusWire,
} from './types.js';

/** A 409: the submission was stale or mismatched.  Carries the server's
 *  authoritative state so the UI can recover by rendering it. */
export class ConflictError extends Error {
    state: SessionStatusWire | null;

    constructor(reason: string, state: SessionStatusWire | null) {
        super(reason);
        this.name = 'ConflictError';
        this.state = state;
    }
}

/** A 4xx validation failure, with the server's field-level detail. */
export class RequestError extends Error {
    status: number;
    detail: unknown;

    constructor(status: number, detail: unknown) {
        super(typeof detail === 'string' ? detail : JSON.stringify(detail));
        this.name = 'RequestError';
        this.status = status;
        this.detail = detail;
    }
}

export class SessionClient {
    constructor(private baseUrl: string) {}

    async createSession(body: CreateSessionWire): Promise<SessionStatusWire> {
        return this.request('POST', '/sessions', body);
    }

    async getStatus(sessionId: string): Promise<SessionStatusWire> {
        return this.request('GET', `/sessions/${sessionId}`);
    }

    async submitInterpretation(
        sessionId: string,
        sequenceNo: number,
        ballotId: string,
        interpretations: Record<string, string>,
    ): Promise<SessionStatusWire> {
        return this.request('POST', `/sessions/${sessionId}/ballots`, {
            sequence_no: sequenceNo,
            ballot_id: ballotId,
            interpretations,
        });
    }

    async getEvents(sessionId: string, after: number): Promise<{
        session_id: string;
        events: Record<string, unknown>[];
        last_sequence_no: number;
    }> {
        return this.request('GET', `/sessions/${sessionId}/events?after=${after}`);
    }

    async exportSession(sessionId: string): Promise<ExportWire> {
        return this.request('GET', `/sessions/${sessionId}/export`);
    }

    private async request(method: string, path: string, body?: unknown): Promise<any> {
        const response = await fetch(this.baseUrl + path, {
            method,
            headers: body === undefined ? {} : { 'content-type': 'application/json' },
            body: body === undefined ? undefined : JSON.stringify(body),
        });
        if (response.status === 409) {
            const payload = await response.json();
            const detail = payload.detail ?? {};
            throw new ConflictError(detail.reason ?? 'conflict', detail.state ?? null);
        }
        if (!response.ok) {
            let detail: unknown;
            try {
                detail = (await response.json()).detail;
            } catch {
                detail = response.statusText;
            }
            throw new RequestError(response.status, detail);
        }
        return response.json();
    }
}
