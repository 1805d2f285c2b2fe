// Typed client for the sagekb service. Every request the UI makes goes
// through this module, keyed by an entry in CALL_TABLE, so the contract test
// can prove the UI issues only documented endpoints.

export interface KbSummary {
  kb_id: string
  name: string
  created_at: string
  document_count: number
  chunk_count: number
  triple_count: number
}

export interface Reference {
  doc_id: string
  source_name: string
  chunk_id: string
}

export interface ContextEntry {
  chunk_id: string
  doc_id: string
  source_name: string
  text: string
  origin: 'vector' | 'graph'
  score: number | null
}

export interface ContextTriple {
  subject: string
  predicate: string
  object: string
  source_chunk_id: string
}

export interface ChatTrailer {
  mode: string
  no_context: boolean
  references: Reference[]
  context: { entries: ContextEntry[]; triples: ContextTriple[] }
}

export interface ChatResponse extends ChatTrailer {
  answer: string
}

export interface IngestResponse {
  doc_id: string
  chunk_count: number
  triple_count: number
  deduplicated: boolean
}

export interface JobEvent {
  stage: string
  detail: string
  timestamp: string
}

export interface ReportJobStatus {
  job_id: string
  question: string
  status: string
  source_mode: string
  report_id: string | null
  failed_stage: string | null
  error: string | null
  events: JobEvent[]
}

export interface HealthStatus {
  status: string
  mock: boolean
  transcription: boolean
}

export interface ChatTurnRequest {
  query: string
  mode: string
  k?: number
  depth?: number
  history?: { role: string; content: string }[]
}

export class ApiServiceError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
    public stage?: string,
  ) {
    super(message)
    this.name = 'ApiServiceError'
  }
}

// One row per distinct request the client can issue; templates use {param}
// placeholders and must each appear in docs/endpoints.json.
export const CALL_TABLE: { method: string; template: string }[] = [
  { method: 'GET', template: '/health' },
  { method: 'POST', template: '/kb' },
  { method: 'GET', template: '/kb' },
  { method: 'DELETE', template: '/kb/{kb_id}' },
  { method: 'POST', template: '/kb/{kb_id}/documents' },
  { method: 'POST', template: '/kb/{kb_id}/chat' },
  { method: 'POST', template: '/kb/{kb_id}/reports' },
  { method: 'GET', template: '/kb/{kb_id}/reports' },
  { method: 'GET', template: '/kb/{kb_id}/reports/jobs/{job_id}' },
  { method: 'GET', template: '/kb/{kb_id}/reports/{report_id}' },
  { method: 'POST', template: '/eval/runs' },
  { method: 'GET', template: '/eval/runs/{run_id}' },
]

function fill(template: string, params: Record<string, string>): string {
  return template.replace(/\{(\w+)\}/g, (_, key) => {
    const value = params[key]
    if (value === undefined) throw new Error(`missing path param ${key}`)
    return encodeURIComponent(value)
  })
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

export class SageKbClient {
  /** (method, path) of every request actually issued; e2e asserts coverage. */
  readonly issued: { method: string; path: string; template: string }[] = []

  constructor(
    public baseUrl: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(
    method: string,
    template: string,
    params: Record<string, string> = {},
    init: RequestInit = {},
  ): Promise<Response> {
    const known = CALL_TABLE.some((row) => row.method === method && row.template === template)
    if (!known) throw new Error(`request not in CALL_TABLE: ${method} ${template}`)
    const path = fill(template, params)
    this.issued.push({ method, path, template })
    let response: Response
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, { method, ...init })
    } catch (err) {
      throw new ApiServiceError('service_unreachable', String(err), 0)
    }
    if (!response.ok) {
      let code = 'http_error'
      let message = `HTTP ${response.status}`
      let stage: string | undefined
      try {
        const body = await response.json()
        code = body.code ?? code
        message = body.message ?? (body.detail ? JSON.stringify(body.detail) : message)
        stage = body.stage
      } catch {
        /* non-JSON error body */
      }
      throw new ApiServiceError(code, message, response.status, stage)
    }
    return response
  }

  private async json<T>(
    method: string,
    template: string,
    params: Record<string, string> = {},
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = {}
    if (body !== undefined) {
      init.body = JSON.stringify(body)
      init.headers = { 'content-type': 'application/json' }
    }
    const response = await this.request(method, template, params, init)
    return (await response.json()) as T
  }

  health(): Promise<HealthStatus> {
    return this.json('GET', '/health')
  }

  listKbs(): Promise<KbSummary[]> {
    return this.json('GET', '/kb')
  }

  createKb(name: string): Promise<KbSummary> {
    return this.json('POST', '/kb', {}, { name })
  }

  async deleteKb(kbId: string): Promise<void> {
    await this.request('DELETE', '/kb/{kb_id}', { kb_id: kbId })
  }

  async uploadDocument(kbId: string, file: File): Promise<IngestResponse> {
    const form = new FormData()
    form.append('file', file, file.name)
    const response = await this.request('POST', '/kb/{kb_id}/documents', { kb_id: kbId }, { body: form })
    return (await response.json()) as IngestResponse
  }

  chat(kbId: string, turn: ChatTurnRequest): Promise<ChatResponse> {
    return this.json('POST', '/kb/{kb_id}/chat', { kb_id: kbId }, { ...turn, stream: false })
  }

  /** Streaming chat: yields answer deltas, resolves with the trailer. */
  async chatStream(
    kbId: string,
    turn: ChatTurnRequest,
    onDelta: (piece: string) => void,
  ): Promise<ChatTrailer> {
    const response = await this.request(
      'POST',
      '/kb/{kb_id}/chat',
      { kb_id: kbId },
      { body: JSON.stringify({ ...turn, stream: true }), headers: { 'content-type': 'application/json' } },
    )
    if (!response.body) throw new ApiServiceError('stream_unsupported', 'no response body', 0)
    let trailer: ChatTrailer | null = null
    for await (const line of ndjsonLines(response.body)) {
      if ('delta' in line) {
        onDelta(line.delta as string)
      } else {
        trailer = line as unknown as ChatTrailer
      }
    }
    if (!trailer) throw new ApiServiceError('stream_truncated', 'stream ended without trailer', 0)
    return trailer
  }

  submitReport(
    kbId: string,
    body: { question: string; n_queries?: number; top_m?: number; source_mode?: string },
  ): Promise<{ job_id: string }> {
    return this.json('POST', '/kb/{kb_id}/reports', { kb_id: kbId }, body)
  }

  reportJobStatus(kbId: string, jobId: string): Promise<ReportJobStatus> {
    return this.json('GET', '/kb/{kb_id}/reports/jobs/{job_id}', { kb_id: kbId, job_id: jobId })
  }

  listReports(kbId: string): Promise<{ report_ids: string[] }> {
    return this.json('GET', '/kb/{kb_id}/reports', { kb_id: kbId })
  }

  async downloadReport(kbId: string, reportId: string): Promise<string> {
    const response = await this.request('GET', '/kb/{kb_id}/reports/{report_id}', {
      kb_id: kbId,
      report_id: reportId,
    })
    return await response.text()
  }

  submitEvalRun(body: {
    kb_id: string
    dataset: string
    modes: string[]
    manifest?: string
    relevance_binary?: boolean
  }): Promise<{ run_id: string }> {
    return this.json('POST', '/eval/runs', {}, body)
  }

  evalRunStatus(runId: string): Promise<Record<string, unknown>> {
    return this.json('GET', '/eval/runs/{run_id}', { run_id: runId })
  }
}

/** Parse an ndjson byte stream into objects, tolerating chunk boundaries
 * that split lines. */
export async function* ndjsonLines(
  body: ReadableStream<Uint8Array>,
): AsyncGenerator<Record<string, unknown>> {
  const reader = body.getReader()
  const decoder = new TextDecoder()
  let buffer = ''
  for (;;) {
    const { done, value } = await reader.read()
    if (done) break
    buffer += decoder.decode(value, { stream: true })
    let newline = buffer.indexOf('\n')
    while (newline >= 0) {
      const line = buffer.slice(0, newline).trim()
      buffer = buffer.slice(newline + 1)
      if (line) yield JSON.parse(line)
      newline = buffer.indexOf('\n')
    }
  }
  const rest = buffer.trim()
  if (rest) yield JSON.parse(rest)
}
