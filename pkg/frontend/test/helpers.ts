import fixtures from "./fixtures.json";
import type {
  ActionResponse,
  Api,
  Bell,
  CreateResponse,
  Debrief,
  ScenarioRow,
} from "../src/types";

export { fixtures };

// Scripted stand-in for the service, fed with captured real responses.
export class FakeApi implements Api {
  actionQueue: ActionResponse[] = [];
  failListing = false;

  listScenarios(): Promise<ScenarioRow[]> {
    if (this.failListing) return Promise.reject(new Error("connection refused"));
    return Promise.resolve(fixtures.scenarios as ScenarioRow[]);
  }

  createSession(_scenarioId: string): Promise<CreateResponse> {
    return Promise.resolve(fixtures.create as CreateResponse);
  }

  submitAction(): Promise<ActionResponse> {
    const next = this.actionQueue.shift();
    if (!next) return Promise.reject(new Error("no scripted response left"));
    return Promise.resolve(next);
  }

  getDebrief(): Promise<Debrief> {
    return Promise.resolve(fixtures.debrief as Debrief);
  }
}

export class SpyBell implements Bell {
  rings = 0;

  play(): void {
    this.rings += 1;
  }
}

export function mount(): HTMLElement {
  document.body.innerHTML = '<main id="app"></main>';
  return document.getElementById("app") as HTMLElement;
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

export function click(node: Element | null): void {
  if (!node) throw new Error("expected element to click");
  (node as HTMLElement).click();
}
