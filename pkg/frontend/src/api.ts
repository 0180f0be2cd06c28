import type { InstructionResponse, SessionView } from './types'

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`)
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

/** Thin typed client over the session HTTP API. State-changing calls are
 * issued exactly once; failures surface as ApiError for the banner. */
export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response
    try {
      resp = await this.fetchFn(`${this.baseUrl}${path}`, init)
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${String(err)}`)
    }
    if (!resp.ok) {
      let detail = resp.statusText
      try {
        const body = (await resp.json()) as { detail?: string }
        if (body.detail) detail = body.detail
      } catch {
        // plain-text error body; keep statusText
      }
      throw new ApiError(resp.status, detail)
    }
    return (await resp.json()) as T
  }

  async createSession(sceneSpec: object): Promise<string> {
    const body = await this.request<{ sessionId: string }>('/sessions', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ sceneSpec }),
    })
    return body.sessionId
  }

  async createSessionFromRef(sceneRef: string): Promise<string> {
    const body = await this.request<{ sessionId: string }>('/sessions', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ sceneRef }),
    })
    return body.sessionId
  }

  submitInstruction(sessionId: string, text: string): Promise<InstructionResponse> {
    return this.request<InstructionResponse>(`/sessions/${sessionId}/instruction`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ text }),
    })
  }

  confirm(sessionId: string): Promise<{ outcome: unknown; phase: string }> {
    return this.request(`/sessions/${sessionId}/confirm`, { method: 'POST' })
  }

  abort(sessionId: string): Promise<{ outcome: unknown; phase: string }> {
    return this.request(`/sessions/${sessionId}/abort`, { method: 'POST' })
  }

  getState(sessionId: string): Promise<SessionView> {
    return this.request<SessionView>(`/sessions/${sessionId}/state`)
  }

  sceneUrl(sessionId: string): string {
    return `${this.baseUrl}/sessions/${sessionId}/scene.png`
  }

  overlayUrl(sessionId: string, bust?: number): string {
    const suffix = bust === undefined ? '' : `?t=${bust}`
    return `${this.baseUrl}/sessions/${sessionId}/overlay.png${suffix}`
  }
}
