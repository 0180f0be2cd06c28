// End-to-end check against the live Python service: the overlay geometry
// the console draws must match the service-reported bbox within one
// pixel, and the confirm control must be unreachable once suspended.

import { afterAll, beforeAll, describe, expect, it, vi } from 'vitest'
import { spawn, ChildProcess } from 'node:child_process'
import { mkdtempSync, writeFileSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { dirname, join } from 'node:path'
import { fileURLToPath } from 'node:url'

const HERE = dirname(fileURLToPath(import.meta.url))

import { ApiClient } from '../src/api'
import { bboxToCanvasRect } from '../src/overlay'
import { controlAvailability, dispatchConfirm } from '../src/state'

const PORT = 18700 + Math.floor(Math.random() * 500)
const BASE = `http://127.0.0.1:${PORT}`

const SCENE = {
  seed: 11,
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

let server: ChildProcess

async function waitForHealthy(timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/healthz`)
      if (resp.ok) return
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 250))
  }
  throw new Error('service did not become healthy in time')
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), 'console-itest-'))
  const configPath = join(dir, 'config.json')
  writeFileSync(configPath, JSON.stringify({ port: PORT, detector: 'oracle' }))
  server = spawn('python3', ['-m', 'targetgrasp.cli', 'serve', '--config', configPath], {
    cwd: join(HERE, '..', '..'),
    stdio: 'ignore',
  })
  await waitForHealthy()
}, 40000)

afterAll(() => {
  server?.kill('SIGTERM')
})

describe('console against the live service', () => {
  it('draws the service bbox within one pixel at native resolution', async () => {
    const client = new ApiClient(BASE)
    const sessionId = await client.createSession(SCENE)
    const result = await client.submitInstruction(sessionId, 'Give me the mug.')
    expect(result.triage?.category).toBe('target')
    expect(result.candidates.length).toBeGreaterThan(0)

    const state = await client.getState(sessionId)
    expect(state.phase).toBe('awaiting_confirm')
    const bbox = state.triage?.bbox
    expect(bbox).toBeDefined()
    const rect = bboxToCanvasRect(bbox!, 1)
    expect(Math.abs(rect.x - bbox![0])).toBeLessThanOrEqual(1)
    expect(Math.abs(rect.y - bbox![1])).toBeLessThanOrEqual(1)
    expect(Math.abs(rect.x + rect.w - bbox![2])).toBeLessThanOrEqual(1)
    expect(Math.abs(rect.y + rect.h - bbox![3])).toBeLessThanOrEqual(1)

    // guarded confirm goes through in awaiting_confirm and executes
    const dispatch = await dispatchConfirm(client, state)
    expect(dispatch.sent).toBe(true)
    const finalState = await client.getState(sessionId)
    expect(finalState.phase).toBe('executed')
    expect(finalState.outcome?.execution_result).toBe('success')
  }, 40000)

  it('keeps confirm unreachable after a suspension', async () => {
    const client = new ApiClient(BASE)
    const sessionId = await client.createSession(SCENE)
    const result = await client.submitInstruction(sessionId, 'please grasp me that black pen.')
    expect(result.outcome.kind).toBe('suspended')
    expect(result.outcome.category).toBe('no_target')

    const state = await client.getState(sessionId)
    expect(state.phase).toBe('suspended')
    expect(state.feedback).toBeTruthy()

    // UI guard: control disabled, and the dispatcher refuses to send
    expect(controlAvailability(state.phase).confirmEnabled).toBe(false)
    const confirmSpy = vi.spyOn(client, 'confirm')
    const dispatch = await dispatchConfirm(client, state)
    expect(dispatch.sent).toBe(false)
    expect(confirmSpy).not.toHaveBeenCalled()

    // Even a forced request is rejected by the service's phase machine
    await expect(client.confirm(sessionId)).rejects.toMatchObject({ status: 409 })
  }, 40000)

  it('passes suspension text through verbatim from the API', async () => {
    const client = new ApiClient(BASE)
    const sessionId = await client.createSession(SCENE)
    const result = await client.submitInstruction(sessionId, 'who are you?')
    expect(result.outcome.kind).toBe('suspended')
    expect(result.outcome.category).toBe('irrelevant')
    const state = await client.getState(sessionId)
    expect(state.feedback).toBe(result.outcome.message)
  }, 40000)
})
