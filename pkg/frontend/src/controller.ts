// Session flow: lobby -> play -> summary. The controller owns the client
// calls and the accept/override bookkeeping; rendering stays in render.ts.

import { AdvisorClient } from "./api.js";
import type {
  Advice,
  CreateSessionRequest,
  SessionState,
  SessionSummary,
} from "./types.js";

export type Phase = "lobby" | "play" | "summary";

export interface ControllerView {
  phase: Phase;
  envs: string[];
  state: SessionState | null;
  advice: Advice | null;
  summary: SessionSummary | null;
}

export class SessionController {
  private envs: string[] = [];
  private state: SessionState | null = null;
  private advice: Advice | null = null;
  private summary: SessionSummary | null = null;
  private phase: Phase = "lobby";

  constructor(private readonly client: AdvisorClient) {}

  view(): ControllerView {
    return {
      phase: this.phase,
      envs: this.envs,
      state: this.state,
      advice: this.advice,
      summary: this.summary,
    };
  }

  async loadLobby(): Promise<void> {
    this.envs = (await this.client.listEnvs()).envs;
    this.phase = "lobby";
    this.state = this.advice = this.summary = null;
  }

  async start(req: CreateSessionRequest): Promise<void> {
    this.state = await this.client.createSession(req);
    this.phase = "play";
    this.summary = null;
    await this.refreshAdvice();
  }

  private async refreshAdvice(): Promise<void> {
    if (!this.state || this.state.status !== "active") {
      this.advice = null;
      return;
    }
    this.advice = await this.client.getAdvice(this.state.session_id);
  }

  /** Play a chosen action; `acceptedAdvice` marks it as taking the advisor's
   * recommendation (the only path that can spend budget). */
  async play(action: number, acceptedAdvice: boolean): Promise<void> {
    if (!this.state) throw new Error("no active session");
    this.state = await this.client.step(
      this.state.session_id,
      action,
      this.state.state_version,
      acceptedAdvice,
    );
    if (this.state.status === "done") {
      this.advice = null;
      this.summary = await this.client.getSummary(this.state.session_id);
      this.phase = "summary";
    } else {
      await this.refreshAdvice();
    }
  }

  async acceptAdvice(): Promise<void> {
    if (!this.advice || !this.advice.would_intervene) {
      throw new Error("no intervention on offer");
    }
    await this.play(this.advice.recommended_action, true);
  }

  async declineAdvice(action: number): Promise<void> {
    await this.play(action, false);
  }

  async backToLobby(): Promise<void> {
    await this.loadLobby();
  }
}
