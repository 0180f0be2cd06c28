// Mirrors of the service's GET /state schema. Nothing here is invented
// client-side; fields absent from the API stay absent from these views.

export type Phase =
  | 'idle'
  | 'triaged'
  | 'candidates_ready'
  | 'awaiting_confirm'
  | 'executed'
  | 'suspended'

export type TriageCategory = 'target' | 'no_target' | 'irrelevant'

export interface TriageView {
  category: TriageCategory
  bbox?: [number, number, number, number]
  label?: string
  message?: string
}

export interface CandidateView {
  id: number
  score: number
  width: number
  segment: [[number, number], [number, number]]
  selected: boolean
}

export interface OutcomeView {
  kind: 'grasp' | 'suspended'
  execution_result?: 'success' | 'failure' | 'not-executed'
  category?: string
  message?: string
}

export interface SessionView {
  sessionId: string
  phase: Phase
  instruction: string | null
  triage: TriageView | null
  candidates: CandidateView[]
  selected: unknown
  outcome: OutcomeView | null
  feedback: string | null
}

export interface InstructionResponse {
  triage: TriageView | null
  outcome: OutcomeView
  candidates: CandidateView[]
  phase: Phase
}
