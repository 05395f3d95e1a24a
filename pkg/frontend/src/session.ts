// Client-side session state: the frame list, the linear step history, and
// the latest explanation payload. One step may be in flight at a time; the
// UI reads `busy` to disable submit. Everything here is re-fetchable, so a
// reload restores the same view from the server.

import { ServiceClient, StepRequestBody } from "./api.js";
import { ExplanationPayload, FrameSummary, HistoryStep } from "./types.js";

export interface UiSessionState {
    sessionId: string | null;
    frames: FrameSummary[];
    history: HistoryStep[];
    explanations: ExplanationPayload | null;
    busy: boolean;
    error: string | null;
}

type Listener = (state: UiSessionState) => void;

export class SessionController {
    private state: UiSessionState = {
        sessionId: null,
        frames: [],
        history: [],
        explanations: null,
        busy: false,
        error: null,
    };
    private listeners: Listener[] = [];

    constructor(private client: ServiceClient) {}

    get current(): UiSessionState {
        return this.state;
    }

    subscribe(fn: Listener): void {
        this.listeners.push(fn);
    }

    private update(patch: Partial<UiSessionState>): void {
        this.state = { ...this.state, ...patch };
        for (const fn of this.listeners) fn(this.state);
    }

    async start(): Promise<void> {
        const sid = await this.client.createSession();
        this.update({ sessionId: sid, frames: [], history: [], explanations: null, error: null });
    }

    // Re-attach to an existing session, e.g. after a reload with the id in
    // the URL hash. The server is the source of truth for both lists.
    async restore(sessionId: string): Promise<void> {
        const [frames, history] = await Promise.all([
            this.client.frames(sessionId),
            this.client.history(sessionId),
        ]);
        this.update({ sessionId, frames, history, explanations: null, error: null });
    }

    async upload(file: Blob, name?: string): Promise<void> {
        const sid = this.requireSession();
        try {
            await this.client.uploadFrame(sid, file, name);
            this.update({ frames: await this.client.frames(sid), error: null });
        } catch (err) {
            this.update({ error: messageOf(err) });
            throw err;
        }
    }

    async submitStep(body: StepRequestBody): Promise<void> {
        const sid = this.requireSession();
        if (this.state.busy) {
            throw new Error("a step is already in flight");
        }
        this.update({ busy: true, error: null });
        try {
            const result = await this.client.applyStep(sid, body);
            const [frames, history] = await Promise.all([
                this.client.frames(sid),
                this.client.history(sid),
            ]);
            this.update({
                busy: false,
                frames,
                history,
                explanations: result.explanations,
            });
        } catch (err) {
            this.update({ busy: false, error: messageOf(err) });
            throw err;
        }
    }

    private requireSession(): string {
        if (!this.state.sessionId) {
            throw new Error("no session yet");
        }
        return this.state.sessionId;
    }
}

function messageOf(err: unknown): string {
    return err instanceof Error ? err.message : String(err);
}
