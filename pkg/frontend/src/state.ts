import type { Phase, SessionView } from './types'
import type { ApiClient } from './api'

export interface ControlAvailability {
  instructionEnabled: boolean
  confirmEnabled: boolean
  abortEnabled: boolean
}

const NON_TERMINAL: readonly Phase[] = [
  'idle',
  'triaged',
  'candidates_ready',
  'awaiting_confirm',
]

/** Legal controls per phase. Confirm exists ONLY in awaiting_confirm, so a
 * suspended session can never reach it. */
export function controlAvailability(phase: Phase): ControlAvailability {
  return {
    instructionEnabled: phase === 'idle',
    confirmEnabled: phase === 'awaiting_confirm',
    abortEnabled: NON_TERMINAL.includes(phase),
  }
}

export interface Banner {
  kind: 'success' | 'failure' | 'suspension' | 'error'
  text: string
}

/** Banner content derived verbatim from API fields. */
export function bannerFor(view: SessionView): Banner | null {
  if (view.outcome == null) return null
  if (view.outcome.kind === 'suspended') {
    return {
      kind: 'suspension',
      text: view.feedback ?? view.outcome.message ?? 'Task suspended.',
    }
  }
  if (view.outcome.execution_result === 'success') {
    return { kind: 'success', text: 'Grasp executed: success' }
  }
  if (view.outcome.execution_result === 'failure') {
    return { kind: 'failure', text: 'Grasp executed: failure' }
  }
  return null
}

export interface DispatchResult {
  sent: boolean
  error?: string
}

/** Guarded confirm: never issues a request outside awaiting_confirm. */
export async function dispatchConfirm(
  client: Pick<ApiClient, 'confirm'>,
  view: Pick<SessionView, 'sessionId' | 'phase'>,
): Promise<DispatchResult> {
  if (!controlAvailability(view.phase).confirmEnabled) {
    return { sent: false, error: `confirm is not available in phase ${view.phase}` }
  }
  await client.confirm(view.sessionId)
  return { sent: true }
}

/** Guarded abort: only for non-terminal phases. */
export async function dispatchAbort(
  client: Pick<ApiClient, 'abort'>,
  view: Pick<SessionView, 'sessionId' | 'phase'>,
): Promise<DispatchResult> {
  if (!controlAvailability(view.phase).abortEnabled) {
    return { sent: false, error: `abort is not available in phase ${view.phase}` }
  }
  await client.abort(view.sessionId)
  return { sent: true }
}
