/** Pure view-model: everything rendered is derived from the latest
 *  service snapshot.  Numbers are passed through verbatim (margin and
 *  threshold exactly as served); beta is shown to 3 decimals by trimming
 *  the server's 4-decimal string, never recomputed. */

import type { SessionStatusWire, SnapshotWire } from './types.js';

export interface SubauditRow {
    contestId: string;
    winner: string;
    loser: string;
    winnerVotes: number;
    loserVotes: number;
    margin: number;
    /** server's 4-decimal threshold string, displayed verbatim */
    threshold: string;
    /** server's beta trimmed to 3 decimals for display */
    beta: string;
    state: 'open' | 'accepted';
    /** margin/threshold clamped to [0, 1]; display-only */
    progress: number;
    contestClosed: boolean;
}

export interface ContestGroup {
    contestId: string;
    state: 'active' | 'accepted' | 'fully_counted';
    rows: SubauditRow[];
    fullCountLabel: string | null;
}

export interface EntryOption {
    label: string;
    /** value submitted as the interpretation */
    choice: string;
    /** 1-based hot key; 0 is reserved for the invalid-vote entry */
    hotkey: string;
}

export interface SessionView {
    sessionId: string;
    alpha: number;
    seed: number;
    drawnCount: number;
    verdictKind: 'in_progress' | 'all_accepted' | 'full_count';
    verdictLabel: string;
    finished: boolean;
    next: { sequenceNo: number; ballotId: string; contests: string[] } | null;
    entryOptions: EntryOption[];
    groups: ContestGroup[];
    recentDraws: { ballotId: string; marks: string }[];
}

export const INVALID_CHOICE = '@invalid';

export function trimBeta(beta4dp: string): string {
    return beta4dp.replace(/(\.\d{3})\d$/, '$1');
}

export function progressRatio(margin: number, threshold: string): number {
    const limit = Number.parseFloat(threshold);
    if (!Number.isFinite(limit) || limit <= 0 || margin <= 0) {
        return 0;
    }
    return Math.min(1, margin / limit);
}

function verdictLabel(snapshot: SnapshotWire): string {
    switch (snapshot.verdict.kind) {
        case 'all_accepted':
            return 'Audit complete: every reported outcome accepted';
        case 'full_count': {
            const parts = Object.values(snapshot.full_counts).map((fc) => {
                if (fc.tie) return `${fc.contest_id}: exact tie revealed`;
                const winners = (fc.winners ?? []).join(', ');
                return fc.agrees_with_reported
                    ? `${fc.contest_id}: full count confirms ${winners}`
                    : `${fc.contest_id}: full count OVERTURNS reported outcome (${winners})`;
            });
            return `Audit complete by full count. ${parts.join(' | ')}`;
        }
        default:
            return 'Audit in progress';
    }
}

function fullCountLabel(snapshot: SnapshotWire, contestId: string): string | null {
    const fc = snapshot.full_counts[contestId];
    if (!fc) return null;
    const tallies = Object.entries(fc.tallies)
        .map(([candidate, votes]) => `${candidate}=${votes}`)
        .join(' ');
    if (fc.tie) return `full count: ${tallies} (tie)`;
    return `full count: ${tallies} -> ${(fc.winners ?? []).join(', ')}`;
}

export function buildSessionView(status: SessionStatusWire): SessionView {
    const snapshot = status.snapshot;
    const rows: SubauditRow[] = snapshot.subaudits.map((sub) => ({
        contestId: sub.contest_id,
        winner: sub.winner,
        loser: sub.loser,
        winnerVotes: sub.winner_votes,
        loserVotes: sub.loser_votes,
        margin: sub.margin,
        threshold: sub.threshold,
        beta: trimBeta(sub.beta),
        state: sub.state,
        progress: progressRatio(sub.margin, sub.threshold),
        contestClosed: snapshot.contest_states[sub.contest_id] !== 'active',
    }));

    const groups: ContestGroup[] = snapshot.plan.contests.map((contest) => ({
        contestId: contest.contest_id,
        state: snapshot.contest_states[contest.contest_id],
        rows: rows.filter((r) => r.contestId === contest.contest_id),
        fullCountLabel: fullCountLabel(snapshot, contest.contest_id),
    }));

    const entryOptions: EntryOption[] = [];
    if (status.next) {
        const candidates = new Set<string>();
        for (const contest of snapshot.plan.contests) {
            if (status.next.contests.includes(contest.contest_id)) {
                contest.candidates.forEach((c) => candidates.add(c));
            }
        }
        let key = 1;
        for (const candidate of candidates) {
            entryOptions.push({ label: candidate, choice: candidate, hotkey: String(key) });
            key += 1;
        }
        entryOptions.push({ label: 'invalid vote', choice: INVALID_CHOICE, hotkey: '0' });
    }

    const recentDraws = snapshot.drawn
        .slice(-8)
        .reverse()
        .map((d) => ({
            ballotId: d.ballot_id,
            marks: Object.entries(d.interpretations)
                .map(([cid, choice]) => `${cid}=${choice}`)
                .join(' '),
        }));

    return {
        sessionId: status.session_id,
        alpha: status.alpha,
        seed: status.seed,
        drawnCount: snapshot.drawn_count,
        verdictKind: snapshot.verdict.kind,
        verdictLabel: verdictLabel(snapshot),
        finished: snapshot.verdict.kind !== 'in_progress',
        next: status.next
            ? {
                  sequenceNo: status.next.sequence_no,
                  ballotId: status.next.ballot_id,
                  contests: status.next.contests,
              }
            : null,
        entryOptions,
        groups,
        recentDraws,
    };
}
