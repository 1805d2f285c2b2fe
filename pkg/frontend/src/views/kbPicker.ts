// KB selection bar shared by all tabs: list, create, select, delete.

import { ApiServiceError, KbSummary, SageKbClient } from '../api.js'
import { UiSession } from '../state.js'

export interface KbPicker {
  element: HTMLElement
  refresh(): Promise<void>
  create(name: string): Promise<KbSummary>
  select(kbId: string): void
  remove(kbId: string): Promise<void>
}

export function createKbPicker(client: SageKbClient, session: UiSession): KbPicker {
  const element = document.createElement('section')
  element.className = 'kb-picker'

  const banner = document.createElement('div')
  banner.className = 'error-banner hidden'
  const bannerText = document.createElement('span')
  const retryButton = document.createElement('button')
  retryButton.textContent = 'Retry'
  banner.append(bannerText, retryButton)

  const select = document.createElement('select')
  select.className = 'kb-select'
  const createForm = document.createElement('form')
  const nameInput = document.createElement('input')
  nameInput.placeholder = 'new knowledge base name'
  const createButton = document.createElement('button')
  createButton.textContent = 'Create KB'
  const deleteButton = document.createElement('button')
  deleteButton.textContent = 'Delete selected'
  createForm.append(nameInput, createButton)
  element.append(banner, select, createForm, deleteButton)

  let known: KbSummary[] = []

  function showBanner(message: string): void {
    bannerText.textContent = message
    banner.classList.remove('hidden')
  }

  function render(): void {
    select.innerHTML = ''
    const placeholder = document.createElement('option')
    placeholder.value = ''
    placeholder.textContent = known.length ? 'select a knowledge base' : 'no knowledge bases yet'
    select.append(placeholder)
    for (const kb of known) {
      const option = document.createElement('option')
      option.value = kb.kb_id
      option.textContent = `${kb.name} (${kb.document_count} docs, ${kb.chunk_count} chunks)`
      option.selected = kb.kb_id === session.selectedKb
      select.append(option)
    }
  }

  async function refresh(): Promise<void> {
    try {
      known = await client.listKbs()
      banner.classList.add('hidden')
    } catch (err) {
      // Non-blocking: the rest of the UI stays up, retry re-fetches.
      showBanner(err instanceof ApiServiceError ? `service unreachable: ${err.message}` : String(err))
      return
    }
    if (session.selectedKb && !known.some((kb) => kb.kb_id === session.selectedKb)) {
      session.clearSelection()
    }
    render()
  }

  async function create(name: string): Promise<KbSummary> {
    const kb = await client.createKb(name)
    known.push(kb)
    session.selectKb(kb.kb_id)
    render()
    return kb
  }

  function selectKb(kbId: string): void {
    session.selectKb(kbId)
    render()
  }

  async function remove(kbId: string): Promise<void> {
    await client.deleteKb(kbId)
    known = known.filter((kb) => kb.kb_id !== kbId)
    session.kbDeleted(kbId)
    render()
  }

  retryButton.addEventListener('click', () => void refresh())
  select.addEventListener('change', () => {
    if (select.value) selectKb(select.value)
  })
  createForm.addEventListener('submit', (event) => {
    event.preventDefault()
    const name = nameInput.value.trim()
    if (name) {
      void create(name).then(() => {
        nameInput.value = ''
      })
    }
  })
  deleteButton.addEventListener('click', () => {
    if (session.selectedKb) void remove(session.selectedKb)
  })

  return { element, refresh, create, select: selectKb, remove }
}
