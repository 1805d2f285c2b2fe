// Document upload with client-side extension screening; the server check is
// authoritative and its 422 is rendered per file.

import { ApiServiceError, IngestResponse, SageKbClient } from '../api.js'
import { UiSession } from '../state.js'

export const ACCEPTED_EXTENSIONS = ['pdf', 'docx', 'txt', 'csv', 'xlsx', 'md']

export interface UploadRow {
  filename: string
  status: 'rejected' | 'uploaded' | 'duplicate' | 'failed'
  detail: string
}

export interface UploadView {
  element: HTMLElement
  addFiles(files: File[]): Promise<UploadRow[]>
}

export function extensionOf(filename: string): string {
  const dot = filename.lastIndexOf('.')
  return dot >= 0 ? filename.slice(dot + 1).toLowerCase() : ''
}

export function createUploadView(client: SageKbClient, session: UiSession): UploadView {
  const element = document.createElement('section')
  element.className = 'upload-view'
  const input = document.createElement('input')
  input.type = 'file'
  input.multiple = true
  input.accept = ACCEPTED_EXTENSIONS.map((ext) => `.${ext}`).join(',')
  const table = document.createElement('ul')
  table.className = 'upload-rows'
  element.append(input, table)

  function renderRow(row: UploadRow): void {
    const item = document.createElement('li')
    item.className = `upload-row upload-${row.status}`
    item.textContent = `${row.filename}: ${row.detail}`
    table.append(item)
  }

  async function addFiles(files: File[]): Promise<UploadRow[]> {
    const kbId = session.selectedKb
    if (!kbId) throw new Error('no knowledge base selected')
    const rows: UploadRow[] = []
    for (const file of files) {
      const ext = extensionOf(file.name)
      let row: UploadRow
      if (!ACCEPTED_EXTENSIONS.includes(ext)) {
        row = { filename: file.name, status: 'rejected', detail: `unsupported extension .${ext}` }
      } else {
        try {
          const result: IngestResponse = await client.uploadDocument(kbId, file)
          row = result.deduplicated
            ? { filename: file.name, status: 'duplicate', detail: 'already ingested (no changes)' }
            : {
                filename: file.name,
                status: 'uploaded',
                detail: `${result.chunk_count} chunks, ${result.triple_count} triples`,
              }
        } catch (err) {
          const detail =
            err instanceof ApiServiceError ? `${err.code}: ${err.message}` : String(err)
          row = { filename: file.name, status: 'failed', detail }
        }
      }
      rows.push(row)
      renderRow(row)
    }
    return rows
  }

  input.addEventListener('change', () => {
    if (input.files) void addFiles([...input.files])
  })

  return { element, addFiles }
}
