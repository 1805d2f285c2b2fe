// Every request the client can issue must appear in the published endpoint
// document; zero undocumented calls.

import { readFileSync } from 'node:fs'
import { fileURLToPath } from 'node:url'
import { dirname, join } from 'node:path'
import { describe, expect, it } from 'vitest'
import { CALL_TABLE } from '../src/api.js'

const here = dirname(fileURLToPath(import.meta.url))
const doc = JSON.parse(readFileSync(join(here, '..', '..', 'docs', 'endpoints.json'), 'utf-8')) as {
  endpoints: { method: string; path: string }[]
}

describe('endpoint contract', () => {
  it('documents every call the client can issue', () => {
    const documented = new Set(doc.endpoints.map((e) => `${e.method} ${e.path}`))
    const undocumented = CALL_TABLE.filter(
      (row) => !documented.has(`${row.method} ${row.template}`),
    )
    expect(undocumented).toEqual([])
  })

  it('path templates match documented parameter names exactly', () => {
    const byKey = new Map(doc.endpoints.map((e) => [`${e.method} ${e.path}`, e]))
    for (const row of CALL_TABLE) {
      expect(byKey.get(`${row.method} ${row.template}`)?.path).toBe(row.template)
    }
  })
})
