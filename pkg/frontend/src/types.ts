// Wire types, mirroring the session service JSON exactly. The client
// renders what the service reports and evaluates no rules of its own.

export type ScenarioRow = {
  id: string;
  title: string;
  tier: number;
  metrics: { optimal_path_length: number; distinct_actions: number };
};

export type ParamChoice = { value: string; label: string };

export type MenuItem = {
  kind: string;
  label: string;
  parameterized: boolean;
  param_choices: ParamChoice[] | null;
};

export type Vitals = {
  heart_rate: number;
  breathing: string;
  tone: string;
  health: number;
};

export type Cue = { text: string; names_correct_action: boolean } | null;

export type ViewState = {
  session_id: string;
  scenario_id: string;
  scenario_title: string;
  outcome: "ongoing" | "saved" | "died";
  stage_id: string;
  prompt: string;
  vitals: Vitals;
  mistakes: number;
  health: number;
  max_mistakes: number;
  step_index: number;
  cue: Cue;
  menu: MenuItem[];
  abandoned: boolean;
};

export type Feedback = {
  kind: string;
  utterance: string | null;
  audio_cue: boolean;
};

export type ActionResponse = { feedback: Feedback; view: ViewState };

export type CreateResponse = { session_id: string; view: ViewState };

export type DebriefStageRow = {
  stage_id: string;
  attempts: number;
  mistakes: number;
  cues_shown: number;
};

export type Debrief = {
  scenario_id: string;
  outcome: string;
  total_mistakes: number;
  stages: DebriefStageRow[];
  mistakes: {
    step_index: number;
    stage_id: string;
    chosen: string;
    correct: string;
    feedback: string;
  }[];
  coverage: { visited: number; total: number };
};

export interface Api {
  listScenarios(): Promise<ScenarioRow[]>;
  createSession(scenarioId: string): Promise<CreateResponse>;
  submitAction(
    sessionId: string,
    kind: string,
    param: string | null,
    expectedStep: number,
  ): Promise<ActionResponse>;
  getDebrief(sessionId: string): Promise<Debrief>;
}

export interface Bell {
  play(): void;
}
