// Operator console wiring: one session per page, 500 ms state polling,
// overlay image refresh, and guarded confirm/abort controls.

import { ApiClient, ApiError } from './api'
import { appendLog, LogEntry } from './log'
import { bannerFor, controlAvailability, dispatchAbort, dispatchConfirm } from './state'
import type { SessionView } from './types'

const POLL_INTERVAL_MS = 500

const DEMO_SCENE = {
  seed: 7,
  objects: [
    {
      id: 1,
      name: 'mug',
      synonyms: ['coffee mug'],
      color: { label: 'blue', rgb: [40, 70, 200] },
      capabilities: ['hold-water'],
      shape: { type: 'cylinder', radius: 0.033, height: 0.09 },
      pose: { table: { x: -0.08, y: 0.0 } },
    },
    {
      id: 2,
      name: 'apple',
      color: { label: 'red', rgb: [200, 30, 30] },
      shape: { type: 'sphere', radius: 0.034 },
      pose: { table: { x: 0.12, y: -0.05 } },
    },
  ],
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id)
  if (!node) throw new Error(`missing element #${id}`)
  return node as T
}

class ConsoleApp {
  private client: ApiClient
  private sessionId: string | null = null
  private view: SessionView | null = null
  private log: LogEntry[] = []
  private lastPhase: string | null = null
  private showAllCandidates = false

  constructor(baseUrl: string) {
    this.client = new ApiClient(baseUrl)
  }

  async start(): Promise<void> {
    el<HTMLButtonElement>('new-session').addEventListener('click', () => {
      void this.newSession()
    })
    el<HTMLFormElement>('instruction-form').addEventListener('submit', (ev) => {
      ev.preventDefault()
      void this.submit()
    })
    el<HTMLButtonElement>('confirm').addEventListener('click', () => {
      void this.confirm()
    })
    el<HTMLButtonElement>('abort').addEventListener('click', () => {
      void this.abort()
    })
    el<HTMLButtonElement>('toggle-candidates').addEventListener('click', () => {
      this.showAllCandidates = !this.showAllCandidates
      this.renderCandidates()
    })
    await this.newSession()
    window.setInterval(() => void this.poll(), POLL_INTERVAL_MS)
  }

  private note(text: string): void {
    this.log = appendLog(this.log, text)
    const list = el<HTMLUListElement>('event-log')
    list.innerHTML = ''
    for (const entry of this.log.slice().reverse()) {
      const item = document.createElement('li')
      item.textContent = `${entry.at.slice(11, 19)}  ${entry.text}`
      list.appendChild(item)
    }
  }

  private banner(kind: string, text: string): void {
    const node = el<HTMLDivElement>('banner')
    node.className = `banner ${kind}`
    node.textContent = text
    node.hidden = text === ''
  }

  private async newSession(): Promise<void> {
    try {
      this.sessionId = await this.client.createSession(DEMO_SCENE)
    } catch (err) {
      this.banner('error', this.describe(err))
      return
    }
    this.banner('', '')
    this.note(`session ${this.sessionId} opened`)
    this.lastPhase = null
    await this.poll()
  }

  private describe(err: unknown): string {
    if (err instanceof ApiError && err.status === 502) {
      return `detector backend unavailable (502): ${err.detail} — retry when the endpoint is back`
    }
    if (err instanceof ApiError) return err.message
    return String(err)
  }

  private async submit(): Promise<void> {
    if (!this.sessionId) return
    const input = el<HTMLInputElement>('instruction')
    const text = input.value.trim()
    if (!text) return
    this.note(`instruction: ${text}`)
    try {
      await this.client.submitInstruction(this.sessionId, text)
    } catch (err) {
      this.banner('error', this.describe(err))
      return
    }
    await this.poll()
  }

  private async confirm(): Promise<void> {
    if (!this.view) return
    const result = await dispatchConfirm(this.client, this.view).catch((err) => ({
      sent: false,
      error: this.describe(err),
    }))
    if (!result.sent && result.error) this.banner('error', result.error)
    else this.note('grasp confirmed by operator')
    await this.poll()
  }

  private async abort(): Promise<void> {
    if (!this.view) return
    const result = await dispatchAbort(this.client, this.view).catch((err) => ({
      sent: false,
      error: this.describe(err),
    }))
    if (!result.sent && result.error) this.banner('error', result.error)
    else this.note('session aborted by operator')
    await this.poll()
  }

  private renderCandidates(): void {
    if (!this.view) return
    const tbody = el<HTMLTableSectionElement>('candidate-rows')
    tbody.innerHTML = ''
    const ranked = [...this.view.candidates].sort((a, b) => b.score - a.score || a.id - b.id)
    const rows = this.showAllCandidates ? ranked : ranked.slice(0, 10)
    for (const candidate of rows) {
      const tr = document.createElement('tr')
      if (candidate.selected) tr.className = 'selected'
      tr.innerHTML =
        `<td>${candidate.id}</td><td>${candidate.score.toFixed(3)}</td>` +
        `<td>${(candidate.width * 1000).toFixed(1)} mm</td>`
      tbody.appendChild(tr)
    }
    el<HTMLButtonElement>('toggle-candidates').textContent = this.showAllCandidates
      ? `show top ${Math.min(10, ranked.length)}`
      : `show all ${ranked.length}`
  }

  private async poll(): Promise<void> {
    if (!this.sessionId) return
    let view: SessionView
    try {
      view = await this.client.getState(this.sessionId)
    } catch (err) {
      this.banner('error', this.describe(err))
      return
    }
    this.view = view

    if (view.phase !== this.lastPhase) {
      this.note(`phase: ${view.phase}`)
      this.lastPhase = view.phase
    }
    el<HTMLSpanElement>('phase').textContent = view.phase
    const avail = controlAvailability(view.phase)
    el<HTMLInputElement>('instruction').disabled = !avail.instructionEnabled
    el<HTMLButtonElement>('submit').disabled = !avail.instructionEnabled
    el<HTMLButtonElement>('confirm').disabled = !avail.confirmEnabled
    el<HTMLButtonElement>('confirm').hidden = !avail.confirmEnabled
    el<HTMLButtonElement>('abort').disabled = !avail.abortEnabled

    const banner = bannerFor(view)
    if (banner) this.banner(banner.kind, banner.text)

    const triageText = view.triage
      ? view.triage.category === 'target'
        ? `target: ${view.triage.label ?? ''}`
        : `${view.triage.category}: ${view.triage.message ?? ''}`
      : 'no instruction yet'
    el<HTMLSpanElement>('triage').textContent = triageText

    // Overlay raster already carries the bbox and candidate markers drawn
    // by the service at native resolution.
    el<HTMLImageElement>('scene').src = this.client.overlayUrl(this.sessionId, Date.now())
    this.renderCandidates()
  }
}

const base = new URLSearchParams(window.location.search).get('api') ?? 'http://127.0.0.1:8080'
void new ConsoleApp(base).start()
