// S2: advice semantics -- repeated reads are pure, and refusing advice never
// spends budget.

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { AdvisorClient } from "../src/api.js";
import type { SessionState } from "../src/types.js";
import { startServer, type Server } from "./harness.js";

let server: Server;
let client: AdvisorClient;

beforeAll(async () => {
  server = await startServer(8932);
  client = new AdvisorClient(server.base);
}, 60_000);

afterAll(() => server.stop());

describe("advice purity", () => {
  it("returns the identical advice object for repeated reads of a state", async () => {
    const st = await client.createSession({
      env: "trap",
      skill: "L1",
      budget_mode: "frequency",
      budget: 0.5,
      seed: 21,
    });
    const first = await client.getAdvice(st.session_id);
    for (let i = 0; i < 10; i++) {
      expect(await client.getAdvice(st.session_id)).toEqual(first);
    }
  });

  it("stays pure across every state of a full episode", async () => {
    let st: SessionState = await client.createSession({
      env: "ttt:3x3m3:L1",
      skill: "L2",
      budget_mode: "frequency",
      budget: 0.25,
      seed: 5,
    });
    while (st.status === "active") {
      const a = await client.getAdvice(st.session_id);
      const b = await client.getAdvice(st.session_id);
      expect(b).toEqual(a);
      st = await client.step(
        st.session_id,
        st.legal_actions[0].action,
        st.state_version,
        false,
      );
    }
  });
});

describe("refusal semantics", () => {
  it("never decrements the budget when advice is declined", async () => {
    for (const seed of [1, 2, 3, 4, 5]) {
      let st: SessionState = await client.createSession({
        env: "trap",
        skill: "L1",
        strategy: "valuemax",
        budget_mode: "count",
        budget: 2,
        seed,
      });
      let sawIntervention = false;
      while (st.status === "active") {
        const advice = await client.getAdvice(st.session_id);
        sawIntervention ||= advice.would_intervene;
        // always play our own first legal action and refuse
        st = await client.step(
          st.session_id,
          st.legal_actions[0].action,
          st.state_version,
          false,
        );
        expect(st.budget_remaining).toBe(2);
      }
      const summary = await client.getSummary(st.session_id);
      expect(summary.interventions_accepted).toBe(0);
      expect(summary.budget_remaining).toBe(2);
      expect(sawIntervention).toBe(true); // the offer was actually on the table
    }
  });

  it("ignores accepted_advice flags sent when no intervention was offered", async () => {
    let st: SessionState = await client.createSession({
      env: "trap",
      skill: "L5",
      budget_mode: "frequency",
      budget: 0.0,
      seed: 9,
    });
    // a zero-frequency gate never offers anything; a lying client cannot
    // manufacture interventions
    while (st.status === "active") {
      const advice = await client.getAdvice(st.session_id);
      expect(advice.would_intervene).toBe(false);
      st = await client.step(
        st.session_id,
        st.legal_actions[0].action,
        st.state_version,
        true, // claims acceptance anyway
      );
    }
    const summary = await client.getSummary(st.session_id);
    expect(summary.interventions_accepted).toBe(0);
  });

  it("never spends budget on advice that was read but not acted on this turn", async () => {
    const st = await client.createSession({
      env: "ttt:3x3m3:L1",
      skill: "L1",
      budget_mode: "count",
      budget: 3,
      seed: 14,
    });
    await client.getAdvice(st.session_id);
    await client.getAdvice(st.session_id);
    const after = await client.getState(st.session_id);
    expect(after.budget_remaining).toBe(3);
    expect(after.state_version).toBe(st.state_version);
  });
});
