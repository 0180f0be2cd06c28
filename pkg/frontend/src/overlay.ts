import type { CandidateView, SessionView } from './types'

export interface RectPx {
  x: number
  y: number
  w: number
  h: number
}

export const BBOX_STROKE = '#ff2828'
export const SEGMENT_STROKE = '#50c8ff'
export const SELECTED_STROKE = '#3cff5a'
export const CANDIDATE_DISPLAY_CAP = 10

/** Service bbox [x1,y1,x2,y2] in image pixels to a canvas rectangle.
 * At native scale (1) the rectangle equals the service box. */
export function bboxToCanvasRect(
  bbox: [number, number, number, number],
  scale: number,
): RectPx {
  const [x1, y1, x2, y2] = bbox
  return { x: x1 * scale, y: y1 * scale, w: (x2 - x1) * scale, h: (y2 - y1) * scale }
}

export function segmentToCanvas(
  segment: [[number, number], [number, number]],
  scale: number,
): [[number, number], [number, number]] {
  return [
    [segment[0][0] * scale, segment[0][1] * scale],
    [segment[1][0] * scale, segment[1][1] * scale],
  ]
}

/** Top candidates by score for readability; the full list behind a toggle. */
export function visibleCandidates(
  candidates: CandidateView[],
  showAll: boolean,
): CandidateView[] {
  const ranked = [...candidates].sort((a, b) => b.score - a.score || a.id - b.id)
  return showAll ? ranked : ranked.slice(0, CANDIDATE_DISPLAY_CAP)
}

/** The drawing surface subset the overlay needs; a test can record calls. */
export interface StrokeSurface {
  strokeStyle: string
  lineWidth: number
  beginPath(): void
  moveTo(x: number, y: number): void
  lineTo(x: number, y: number): void
  stroke(): void
  strokeRect(x: number, y: number, w: number, h: number): void
}

export function drawOverlay(
  ctx: StrokeSurface,
  view: SessionView,
  scale: number,
  showAll = false,
): void {
  if (view.triage?.bbox == null) return
  for (const candidate of visibleCandidates(view.candidates, showAll)) {
    const [[ax, ay], [bx, by]] = segmentToCanvas(candidate.segment, scale)
    ctx.strokeStyle = candidate.selected ? SELECTED_STROKE : SEGMENT_STROKE
    ctx.lineWidth = candidate.selected ? 3 : 1
    ctx.beginPath()
    ctx.moveTo(ax, ay)
    ctx.lineTo(bx, by)
    ctx.stroke()
  }
  const rect = bboxToCanvasRect(view.triage.bbox, scale)
  ctx.strokeStyle = BBOX_STROKE
  ctx.lineWidth = 2
  ctx.strokeRect(rect.x, rect.y, rect.w, rect.h)
}
