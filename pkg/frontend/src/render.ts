// Pure HTML-string views. Keeping these free of DOM calls makes every screen
// unit-testable in node; main.ts owns the (tiny) amount of real DOM wiring.

import type {
  Advice,
  LegalAction,
  RenderState,
  SessionState,
  SessionSummary,
} from "./types.js";

const MARKS = ["", "X", "O"];

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderLobby(envs: string[]): string {
  const options = envs
    .map((e) => `<option value="${escapeHtml(e)}">${escapeHtml(e)}</option>`)
    .join("");
  return `
<section class="lobby">
  <h1>advisor-lab</h1>
  <form data-role="new-session">
    <label>Environment <select name="env">${options}</select></label>
    <label>Skill <select name="skill">
      <option>L1</option><option>L2</option><option>L3</option>
      <option>L4</option><option>L5</option>
    </select></label>
    <label>Strategy <select name="strategy">
      <option value="valuemax">valuemax</option>
      <option value="expert">expert</option>
    </select></label>
    <label>Budget mode <select name="budget_mode">
      <option value="count">count</option>
      <option value="frequency">frequency</option>
    </select></label>
    <label>Budget <input name="budget" type="number" step="any" value="1"></label>
    <label>Seed <input name="seed" type="number" value="0"></label>
    <button type="submit">Start session</button>
  </form>
</section>`;
}

export function renderBoard(state: RenderState, legal: LegalAction[]): string {
  const size = state.size ?? 3;
  const cells = state.cells ?? new Array(size * size).fill(0);
  const playable = new Map(legal.map((a) => [a.cell ?? -1, a.action]));
  const rows: string[] = [];
  for (let y = 0; y < size; y++) {
    const tds: string[] = [];
    for (let x = 0; x < size; x++) {
      const c = y * size + x;
      const mark = MARKS[cells[c]] ?? "";
      const action = playable.get(c);
      tds.push(
        action === undefined
          ? `<td class="cell">${mark}</td>`
          : `<td class="cell playable" data-action="${action}">${mark}</td>`,
      );
    }
    rows.push(`<tr>${tds.join("")}</tr>`);
  }
  return `<table class="board">${rows.join("")}</table>`;
}

export function renderGrid(state: RenderState): string {
  const rows = state.rows ?? [];
  const [px, py] = state.cell ?? [-1, -1];
  const out = rows.map((row, y) => {
    const tds = [...row].map((ch, x) => {
      const here = x === px && y === py;
      const cls = ch === "H" ? "hazard" : ch === "G" ? "goal" : "floor";
      return `<td class="cell ${cls}${here ? " agent" : ""}">${here ? "@" : escapeHtml(ch)}</td>`;
    });
    return `<tr>${tds.join("")}</tr>`;
  });
  return `<table class="grid">${out.join("")}</table>`;
}

export function renderActionButtons(legal: LegalAction[]): string {
  return legal
    .map(
      (a) =>
        `<button class="action" data-action="${a.action}">${escapeHtml(a.label)}</button>`,
    )
    .join("");
}

export function renderBudgetMeter(remaining: number | null): string {
  if (remaining === null) {
    return `<div class="budget" data-role="budget">budget: frequency-gated</div>`;
  }
  const pips = remaining > 0 ? "●".repeat(Math.min(remaining, 12)) : "–";
  return `<div class="budget" data-role="budget">budget: ${remaining} <span class="pips">${pips}</span></div>`;
}

export function renderAdvicePanel(advice: Advice, legal: LegalAction[]): string {
  const labels = new Map(legal.map((a) => [a.action, a.label]));
  const deltas = advice.deltas
    .map((d) => ({ action: d.action, value: Number(d.delta) }))
    .sort((a, b) => b.value - a.value);
  const span = Math.max(...deltas.map((d) => Math.abs(d.value)), 1e-9);
  const bars = deltas
    .map((d) => {
      const width = Math.round((Math.abs(d.value) / span) * 100);
      const cls = d.value >= 0 ? "gain" : "loss";
      return `<li class="delta ${cls}" data-action="${d.action}">
        <span class="label">${escapeHtml(labels.get(d.action) ?? String(d.action))}</span>
        <span class="bar" style="width:${width}%"></span>
        <span class="value">${d.value.toFixed(4)}</span>
      </li>`;
    })
    .join("");
  const banner = advice.would_intervene
    ? `<div class="intervene" data-role="intervene">
         Advisor recommends <b>${escapeHtml(labels.get(advice.recommended_action) ?? String(advice.recommended_action))}</b>
         <button data-role="accept">Accept</button>
         <button data-role="decline">Play my own move</button>
       </div>`
    : `<div class="quiet" data-role="quiet">Advisor is holding back.</div>`;
  return `<aside class="advice">${banner}<ul class="deltas">${bars}</ul></aside>`;
}

export function renderPlay(state: SessionState, advice: Advice | null): string {
  const view =
    state.state.kind === "board"
      ? renderBoard(state.state, state.legal_actions)
      : state.state.kind === "grid"
        ? renderGrid(state.state)
        : `<div class="trap-state">${escapeHtml(state.state.name ?? "")}</div>`;
  const actions =
    state.state.kind === "board" ? "" : renderActionButtons(state.legal_actions);
  return `
<section class="play" data-session="${escapeHtml(state.session_id)}" data-version="${state.state_version}">
  ${renderBudgetMeter(state.budget_remaining)}
  ${view}
  <div class="actions">${actions}</div>
  ${advice ? renderAdvicePanel(advice, state.legal_actions) : ""}
</section>`;
}

export function renderSummary(summary: SessionSummary): string {
  return `
<section class="summary">
  <h2>Episode complete</h2>
  <dl>
    <dt>environment</dt><dd>${escapeHtml(summary.env)}</dd>
    <dt>strategy</dt><dd>${escapeHtml(summary.strategy)} (${escapeHtml(summary.budget_mode)})</dd>
    <dt>return</dt><dd>${escapeHtml(summary.total_return)}</dd>
    <dt>steps</dt><dd>${summary.steps_taken}</dd>
    <dt>advice surfaced</dt><dd>${summary.advice_surfaced}</dd>
    <dt>interventions accepted</dt><dd>${summary.interventions_accepted}</dd>
  </dl>
  <button data-role="again">Back to lobby</button>
</section>`;
}
