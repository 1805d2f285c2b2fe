// Exponential poll backoff capped at 10 seconds.

export const BACKOFF_BASE_MS = 400
export const BACKOFF_CAP_MS = 10_000

export function pollDelayMs(attempt: number): number {
  return Math.min(BACKOFF_CAP_MS, BACKOFF_BASE_MS * 2 ** attempt)
}

export function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms))
}
