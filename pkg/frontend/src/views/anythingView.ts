// "Chat With Anything" tab, scoped to text and transcript upload paths.
// Audio/video/image widgets stay disabled with a tooltip until the service
// reports a transcription provider.

import { HealthStatus, SageKbClient } from '../api.js'
import { UiSession } from '../state.js'
import { createChatView } from './chatView.js'
import { createUploadView } from './uploadView.js'

export interface AnythingView {
  element: HTMLElement
  applyCapabilities(health: HealthStatus): void
}

export function createAnythingView(client: SageKbClient, session: UiSession): AnythingView {
  const element = document.createElement('section')
  element.className = 'anything-view'
  const note = document.createElement('p')
  note.textContent =
    'Upload text or transcripts and chat across every modality indexed in this knowledge base.'

  const mediaControls = document.createElement('div')
  mediaControls.className = 'media-controls'
  for (const kind of ['audio', 'video', 'image']) {
    const button = document.createElement('button')
    button.className = `media-upload media-${kind}`
    button.textContent = `Upload ${kind}`
    button.disabled = true
    button.title = 'transcription provider not configured'
    mediaControls.append(button)
  }

  const upload = createUploadView(client, session)
  const chat = createChatView(client, session)
  element.append(note, mediaControls, upload.element, chat.element)

  function applyCapabilities(health: HealthStatus): void {
    for (const button of mediaControls.querySelectorAll<HTMLButtonElement>('.media-audio, .media-video')) {
      button.disabled = !health.transcription
      button.title = health.transcription
        ? 'transcribed text will be indexed; media bytes are never stored'
        : 'transcription provider not configured'
    }
  }

  return { element, applyCapabilities }
}
