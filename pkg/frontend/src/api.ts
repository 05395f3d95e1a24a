// Thin fetch client for the session service. The base URL is the single
// piece of configuration; fetch is injectable so tests can fake the server.

import { ExplanationPayload, FrameSummary, HistoryStep, StepResult } from "./types.js";

export class ApiError extends Error {
    constructor(public status: number, detail: string) {
        super(detail);
    }
}

export interface StepRequestBody {
    op: string | Record<string, unknown>;
    inputs: string[];
    output: string;
    config?: Record<string, unknown>;
}

type FetchFn = typeof fetch;

async function detailOf(res: Response): Promise<string> {
    try {
        const body = await res.json();
        if (body && typeof body.detail === "string") return body.detail;
    } catch {
        // non-JSON error body, fall through
    }
    return `request failed with status ${res.status}`;
}

export class ServiceClient {
    constructor(
        private baseUrl: string,
        private fetchFn: FetchFn = fetch,
        private token?: string,
    ) {
        this.baseUrl = baseUrl.replace(/\/+$/, "");
    }

    private headers(json: boolean): Record<string, string> {
        const h: Record<string, string> = {};
        if (json) h["Content-Type"] = "application/json";
        if (this.token) h["Authorization"] = `Bearer ${this.token}`;
        return h;
    }

    private async request(path: string, init: RequestInit): Promise<Response> {
        const res = await this.fetchFn(`${this.baseUrl}${path}`, init);
        if (!res.ok && res.status !== 202) {
            throw new ApiError(res.status, await detailOf(res));
        }
        return res;
    }

    async createSession(): Promise<string> {
        const res = await this.request("/sessions", {
            method: "POST",
            headers: this.headers(false),
        });
        return (await res.json()).session_id;
    }

    async uploadFrame(sid: string, file: Blob, name?: string): Promise<FrameSummary> {
        const form = new FormData();
        form.append("file", file, name ? `${name}.csv` : "frame.csv");
        if (name) form.append("name", name);
        const res = await this.request(`/sessions/${sid}/frames`, {
            method: "POST",
            headers: this.headers(false),
            body: form,
        });
        return res.json();
    }

    // Resolves when the step finishes, transparently polling a 202 retry
    // token. pollMs only matters when the server punts to the token flow.
    async applyStep(sid: string, body: StepRequestBody, pollMs = 500): Promise<StepResult> {
        let res = await this.request(`/sessions/${sid}/steps`, {
            method: "POST",
            headers: this.headers(true),
            body: JSON.stringify(body),
        });
        while (res.status === 202) {
            const token = (await res.json()).retry_token;
            await new Promise((r) => setTimeout(r, pollMs));
            res = await this.request(`/sessions/${sid}/steps/${token}`, {
                method: "GET",
                headers: this.headers(false),
            });
        }
        return res.json();
    }

    async history(sid: string): Promise<HistoryStep[]> {
        const res = await this.request(`/sessions/${sid}/history`, {
            method: "GET",
            headers: this.headers(false),
        });
        return (await res.json()).steps;
    }

    async frames(sid: string): Promise<FrameSummary[]> {
        const res = await this.request(`/sessions/${sid}/frames`, {
            method: "GET",
            headers: this.headers(false),
        });
        return (await res.json()).frames;
    }
}

export type { ExplanationPayload, StepResult };
