/** Wire types for the audit-session service (mirrors its JSON exactly). */

export interface SubauditWire {
    contest_id: string;
    winner: string;
    loser: string;
    winner_votes: number;
    loser_votes: number;
    margin: number;
    /** beta * sqrt(pair votes), as a fixed 4-decimal string */
    threshold: string;
    /** stopping constant, as a fixed 4-decimal string */
    beta: string;
    state: 'open' | 'accepted';
}

export interface PlanSubauditWire {
    contest_id: string;
    winner: string;
    loser: string;
    ballots_cast: number;
    beta: string;
    beta_source: string;
}

export interface ContestWire {
    contest_id: string;
    candidates: string[];
    winner_count: number;
    reported_winners: string[];
    ballots_cast: number;
}

export interface VerdictWire {
    kind: 'in_progress' | 'all_accepted' | 'full_count';
    accepted_contests: string[];
    fully_counted_contests: string[];
}

export interface FullCountWire {
    contest_id: string;
    tallies: Record<string, number>;
    winners: string[] | null;
    tie: boolean;
    agrees_with_reported: boolean | null;
}

export interface SnapshotWire {
    format: string;
    plan: {
        alpha: number;
        contests: ContestWire[];
        subaudits: PlanSubauditWire[];
    };
    drawn: { ballot_id: string; interpretations: Record<string, string> }[];
    drawn_count: number;
    subaudits: SubauditWire[];
    contest_states: Record<string, 'active' | 'accepted' | 'fully_counted'>;
    full_counts: Record<string, FullCountWire>;
    verdict: VerdictWire;
}

export interface NextDrawWire {
    sequence_no: number;
    ballot_id: string;
    /** contests on the announced ballot that are still under audit */
    contests: string[];
}

export interface SessionStatusWire {
    session_id: string;
    created_at: string;
    alpha: number;
    seed: number;
    snapshot: SnapshotWire;
    next: NextDrawWire | null;
    last_sequence_no: number;
}

export interface ExportWire {
    session_id: string;
    created_at: string;
    events: Record<string, unknown>[];
    snapshot: SnapshotWire;
    next: NextDrawWire | null;
}

export interface SyntheticSpecWire {
    n: number;
    fractions?: Record<string, number>;
    exact_counts?: Record<string, number>;
    contest_id?: string;
    winner_count?: number;
    reported_winners?: string[];
    seed?: number;
}

export interface CreateSessionWire {
    alpha: number;
    seed: number;
    beta_source?: string;
    beta?: number;
    trials?: number;
    contests?: Omit<ContestWire, 'ballots_cast'>[] | ContestWire[];
    manifest_csv?: string;
    synthetic?: SyntheticSpecWire;
}
