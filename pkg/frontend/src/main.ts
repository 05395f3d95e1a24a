// Browser entry point: wires the session controller, the step composer form,
// and the explanation view onto index.html. The session id lives in the URL
// hash so a reload restores the whole view from the server.

import { ServiceClient } from "./api.js";
import { renderPayloadHtml } from "./charts.js";
import {
    AGG_FNS,
    AggFn,
    COMPARATORS,
    Comparator,
    StepForm,
    composeStep,
    validateForm,
} from "./compose.js";
import { SessionController, UiSessionState } from "./session.js";
import { FrameSummary } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing #${id} in index.html`);
    return node as T;
}

const baseUrlInput = el<HTMLInputElement>("base-url");
const sessionLabel = el<HTMLElement>("session-label");
const newSessionBtn = el<HTMLButtonElement>("new-session");
const uploadInput = el<HTMLInputElement>("upload-file");
const uploadName = el<HTMLInputElement>("upload-name");
const uploadBtn = el<HTMLButtonElement>("upload");
const framesList = el<HTMLElement>("frames");
const historyList = el<HTMLElement>("history");
const explanationsBox = el<HTMLElement>("explanations");
const resultBox = el<HTMLElement>("result-sample");
const errorBox = el<HTMLElement>("error");

const kindSelect = el<HTMLSelectElement>("op-kind");
const inputsSelect = el<HTMLSelectElement>("op-inputs");
const outputName = el<HTMLInputElement>("op-output");
const fieldsBox = el<HTMLElement>("op-fields");
const previewBox = el<HTMLElement>("op-preview");
const submitBtn = el<HTMLButtonElement>("submit-step");

let controller = makeController();

function makeController(): SessionController {
    const client = new ServiceClient(baseUrlInput.value || "http://127.0.0.1:8000");
    const c = new SessionController(client);
    c.subscribe(render);
    return c;
}

function selectedInputs(): FrameSummary[] {
    const picked = new Set(Array.from(inputsSelect.selectedOptions).map((o) => o.value));
    return controller.current.frames.filter((f) => picked.has(f.name));
}

function option(value: string, text = value): string {
    return `<option value="${value}">${text}</option>`;
}

function columnOptions(frames: FrameSummary[], numericOnly = false): string {
    const seen = new Set<string>();
    const parts: string[] = [];
    for (const f of frames) {
        for (const c of f.columns) {
            if (seen.has(c.name)) continue;
            if (numericOnly && c.dtype !== "numeric") continue;
            seen.add(c.name);
            parts.push(option(c.name, `${c.name} (${c.dtype})`));
        }
    }
    return parts.join("");
}

function renderFields(): void {
    const frames = selectedInputs();
    const kind = kindSelect.value;
    if (kind === "filter") {
        fieldsBox.innerHTML = `
            <select id="f-column">${columnOptions(frames)}</select>
            <select id="f-cmp">${COMPARATORS.map((c) => option(c)).join("")}</select>
            <select id="f-lit-type">${option("number")}${option("text")}</select>
            <input id="f-literal" placeholder="literal">`;
    } else if (kind === "groupby") {
        fieldsBox.innerHTML = `
            <select id="g-keys" multiple size="4">${columnOptions(frames)}</select>
            <select id="g-fn">${AGG_FNS.map((f) => option(f)).join("")}</select>
            <select id="g-col">${columnOptions(frames)}</select>
            <button type="button" id="g-add">add aggregate</button>
            <ul id="g-aggs"></ul>`;
        el<HTMLButtonElement>("g-add").addEventListener("click", () => {
            const fn = el<HTMLSelectElement>("g-fn").value;
            const col = el<HTMLSelectElement>("g-col").value;
            if (!col) return;
            const li = document.createElement("li");
            li.dataset.fn = fn;
            li.dataset.col = col;
            li.textContent = `${fn}(${col})`;
            el<HTMLElement>("g-aggs").appendChild(li);
            refreshPreview();
        });
    } else if (kind === "join") {
        fieldsBox.innerHTML = `<select id="j-on">${columnOptions(frames)}</select>`;
    } else {
        fieldsBox.innerHTML = "";
    }
    fieldsBox.querySelectorAll("select,input").forEach((node) =>
        node.addEventListener("input", refreshPreview));
    refreshPreview();
}

function readForm(): StepForm {
    const kind = kindSelect.value;
    if (kind === "filter") {
        return {
            kind: "filter",
            column: el<HTMLSelectElement>("f-column").value,
            comparator: el<HTMLSelectElement>("f-cmp").value as Comparator,
            literal: el<HTMLInputElement>("f-literal").value,
            literalType: el<HTMLSelectElement>("f-lit-type").value as "number" | "text",
        };
    }
    if (kind === "groupby") {
        const keys = Array.from(el<HTMLSelectElement>("g-keys").selectedOptions)
            .map((o) => o.value);
        const aggs = Array.from(el<HTMLElement>("g-aggs").children).map((li) => ({
            fn: (li as HTMLElement).dataset.fn as AggFn,
            column: (li as HTMLElement).dataset.col ?? "",
        }));
        return { kind: "groupby", keys, aggs };
    }
    if (kind === "join") {
        return { kind: "join", on: el<HTMLSelectElement>("j-on").value };
    }
    return { kind: "union" };
}

function refreshPreview(): void {
    const frames = selectedInputs();
    let problems: string[];
    let dsl = "";
    try {
        const form = readForm();
        problems = validateForm(form, frames);
        if (problems.length === 0) dsl = composeStep(form);
    } catch (err) {
        problems = [err instanceof Error ? err.message : String(err)];
    }
    previewBox.textContent = dsl;
    submitBtn.disabled = controller.current.busy || problems.length > 0 ||
        !outputName.value || frames.length === 0;
    submitBtn.title = problems.join("; ");
}

function render(state: UiSessionState): void {
    sessionLabel.textContent = state.sessionId ?? "no session";
    if (state.sessionId) window.location.hash = state.sessionId;
    errorBox.textContent = state.error ?? "";

    framesList.innerHTML = state.frames
        .map((f) => `<li><b>${f.name}</b> ${f.row_count} rows, ` +
            `${f.columns.map((c) => c.name).join(", ")}</li>`)
        .join("");
    inputsSelect.innerHTML = state.frames.map((f) => option(f.name)).join("");

    historyList.innerHTML = state.history
        .map((s) => `<li><code>${s.op}</code> on ${s.inputs.join(", ")} ` +
            `&rarr; <b>${s.output}</b> (${s.n_explanations} explanations)</li>`)
        .join("");

    explanationsBox.innerHTML = state.explanations
        ? renderPayloadHtml(state.explanations)
        : "";
    refreshPreview();
}

async function submit(): Promise<void> {
    const form = readForm();
    const inputs = selectedInputs().map((f) => f.name);
    try {
        await controller.submitStep({
            op: composeStep(form),
            inputs,
            output: outputName.value,
            config: {},
        });
        const payload = controller.current.explanations;
        resultBox.textContent = payload ? `ran: ${payload.step.op}` : "";
        outputName.value = "";
    } catch {
        // the controller already surfaced the error in state
    }
}

newSessionBtn.addEventListener("click", () => {
    controller = makeController();
    controller.start().catch((err) => (errorBox.textContent = String(err)));
});
uploadBtn.addEventListener("click", () => {
    const file = uploadInput.files?.[0];
    if (!file) return;
    controller.upload(file, uploadName.value || undefined).catch(() => undefined);
});
kindSelect.addEventListener("change", renderFields);
inputsSelect.addEventListener("change", renderFields);
outputName.addEventListener("input", refreshPreview);
submitBtn.addEventListener("click", submit);

const fromHash = window.location.hash.slice(1);
if (fromHash) {
    controller.restore(fromHash).catch(() => {
        window.location.hash = "";
    });
}
renderFields();
