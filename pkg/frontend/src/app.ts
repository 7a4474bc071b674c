import { ApiError } from "./api";
import { renderDebrief } from "./debrief";
import { renderHub, renderHubError } from "./hub";
import { renderSession, renderSessionError } from "./session";
import type { Api, Bell, ViewState } from "./types";

// One active session per tab; the server owns every rule, the app only
// routes between the lobby, the session room and the debrief.
export class App {
  private sessionId: string | null = null;
  private view: ViewState | null = null;
  private busy = false;

  constructor(
    private api: Api,
    private bell: Bell,
    private root: HTMLElement,
  ) {}

  async showHub(): Promise<void> {
    this.sessionId = null;
    this.view = null;
    try {
      const rows = await this.api.listScenarios();
      renderHub(this.root, rows, (id) => void this.startSession(id));
    } catch (err) {
      renderHubError(this.root, describe(err), () => void this.showHub());
    }
  }

  async startSession(scenarioId: string): Promise<void> {
    try {
      const created = await this.api.createSession(scenarioId);
      this.sessionId = created.session_id;
      this.view = created.view;
      this.renderRoom(null);
    } catch (err) {
      renderHubError(this.root, describe(err), () => void this.showHub());
    }
  }

  private handlers() {
    return {
      submit: (kind: string, param: string | null) =>
        void this.submitChoice(kind, param),
      toDebrief: () => void this.showDebrief(),
      toHub: () => void this.showHub(),
    };
  }

  private renderRoom(feedback: Parameters<typeof renderSession>[2]): void {
    if (this.view) renderSession(this.root, this.view, feedback, this.handlers());
  }

  async submitChoice(kind: string, param: string | null): Promise<void> {
    if (!this.sessionId || !this.view || this.busy) return;
    this.busy = true;
    try {
      const res = await this.api.submitAction(
        this.sessionId, kind, param, this.view.step_index);
      this.view = res.view;
      if (res.feedback.audio_cue) this.bell.play();
      this.renderRoom(res.feedback);
    } catch (err) {
      if (err instanceof ApiError && err.kind === "stale_step") {
        // someone else moved the session; re-sync silently is not an
        // option without a GET, so surface it like any other error kind
        renderSessionError(this.root, err.kind, err.message);
      } else {
        renderSessionError(this.root, describe_kind(err), describe(err));
      }
    } finally {
      this.busy = false;
    }
  }

  async showDebrief(): Promise<void> {
    if (!this.sessionId) return;
    try {
      const debrief = await this.api.getDebrief(this.sessionId);
      renderDebrief(this.root, debrief, () => void this.showHub());
    } catch (err) {
      renderSessionError(this.root, describe_kind(err), describe(err));
    }
  }
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}

function describe_kind(err: unknown): string {
  return err instanceof ApiError ? err.kind : "network_error";
}
