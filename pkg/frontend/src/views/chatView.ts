// Streaming chat transcript with expandable reference chips per answer.

import { ApiServiceError, Reference, SageKbClient } from '../api.js'
import { UiSession } from '../state.js'

export const MODES = ['vector', 'graph', 'custom'] as const

export interface ChatView {
  element: HTMLElement
  setMode(mode: string): void
  mode(): string
  send(query: string): Promise<void>
}

export function createChatView(client: SageKbClient, session: UiSession): ChatView {
  const element = document.createElement('section')
  element.className = 'chat-view'
  const modeSelect = document.createElement('select')
  modeSelect.className = 'mode-select'
  for (const mode of MODES) {
    const option = document.createElement('option')
    option.value = mode
    option.textContent = `${mode} index`
    if (mode === 'custom') option.selected = true
    modeSelect.append(option)
  }
  const transcript = document.createElement('div')
  transcript.className = 'transcript'
  const form = document.createElement('form')
  const input = document.createElement('input')
  input.placeholder = 'ask your documents...'
  const sendButton = document.createElement('button')
  sendButton.textContent = 'Send'
  form.append(input, sendButton)
  element.append(modeSelect, transcript, form)

  function bubble(className: string): HTMLElement {
    const node = document.createElement('div')
    node.className = `bubble ${className}`
    transcript.append(node)
    return node
  }

  function renderReferences(container: HTMLElement, references: Reference[]): void {
    const chips = document.createElement('div')
    chips.className = 'reference-chips'
    for (const ref of references) {
      const chip = document.createElement('details')
      chip.className = 'reference-chip'
      const label = document.createElement('summary')
      label.textContent = ref.source_name
      const body = document.createElement('span')
      body.textContent = `${ref.doc_id} / ${ref.chunk_id}`
      chip.append(label, body)
      chips.append(chip)
    }
    container.append(chips)
  }

  async function send(query: string): Promise<void> {
    const kbId = session.selectedKb
    if (!kbId) throw new Error('no knowledge base selected')
    const mode = modeSelect.value
    const history = session
      .transcript(kbId)
      .filter((turn) => turn.role !== 'error')
      .map((turn) => ({ role: turn.role, content: turn.text }))
    bubble('user').textContent = query
    session.appendTurn(kbId, { role: 'user', text: query, mode })

    const answerBubble = bubble('assistant')
    answerBubble.dataset.mode = mode
    input.disabled = true
    sendButton.disabled = true
    try {
      const trailer = await client.chatStream(kbId, { query, mode, history }, (delta) => {
        answerBubble.textContent = (answerBubble.textContent ?? '') + delta
      })
      renderReferences(answerBubble, trailer.references)
      session.appendTurn(kbId, {
        role: 'assistant',
        text: answerBubble.childNodes[0]?.textContent ?? '',
        mode,
        references: trailer.references,
      })
    } catch (err) {
      // Inline error bubble; input re-enabled below so the user can retry.
      const message = err instanceof ApiServiceError ? `${err.code}: ${err.message}` : String(err)
      const errorBubble = bubble('error')
      errorBubble.textContent = message
      session.appendTurn(kbId, { role: 'error', text: message, mode })
    } finally {
      input.disabled = false
      sendButton.disabled = false
    }
  }

  form.addEventListener('submit', (event) => {
    event.preventDefault()
    const query = input.value.trim()
    if (query) {
      input.value = ''
      void send(query)
    }
  })

  return {
    element,
    setMode: (mode: string) => {
      modeSelect.value = mode
    },
    mode: () => modeSelect.value,
    send,
  }
}
