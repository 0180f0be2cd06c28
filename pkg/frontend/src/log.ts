export interface LogEntry {
  at: string
  text: string
}

export const LOG_CAP = 200

/** Append-only on-screen event log, newest last, capped for memory. */
export function appendLog(log: readonly LogEntry[], text: string, at = new Date()): LogEntry[] {
  const next = [...log, { at: at.toISOString(), text }]
  return next.length > LOG_CAP ? next.slice(next.length - LOG_CAP) : next
}
