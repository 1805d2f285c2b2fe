// Tab shell: Generate Research Report / Chat With Your Documents /
// Chat With Anything, all bound to one selected knowledge base.

import { SageKbClient } from './api.js'
import { Tab, UiSession } from './state.js'
import { createAnythingView } from './views/anythingView.js'
import { createChatView } from './views/chatView.js'
import { createKbPicker } from './views/kbPicker.js'
import { createReportView } from './views/reportView.js'
import { createUploadView } from './views/uploadView.js'

const QUICK_START = [
  'What are the main findings across my uploaded papers?',
  'Generate a research report on recent advances in my field.',
  'Which documents mention a specific method, and what do they claim?',
]

export function mountApp(root: HTMLElement, baseUrl: string): { session: UiSession; client: SageKbClient } {
  const client = new SageKbClient(baseUrl)
  const session = new UiSession()

  const picker = createKbPicker(client, session)
  const reportView = createReportView(client, session)
  const chatView = createChatView(client, session)
  const uploadView = createUploadView(client, session)
  const anythingView = createAnythingView(client, session)

  const quickStart = document.createElement('aside')
  quickStart.className = 'quick-start'
  const quickTitle = document.createElement('h2')
  quickTitle.textContent = 'Quick start'
  quickStart.append(quickTitle)
  const quickList = document.createElement('ul')
  for (const example of QUICK_START) {
    const item = document.createElement('li')
    item.textContent = example
    quickList.append(item)
  }
  quickStart.append(quickList)

  const tabs: { id: Tab; label: string; panel: HTMLElement }[] = [
    { id: 'report', label: 'Generate Research Report', panel: reportView.element },
    { id: 'documents', label: 'Chat With Your Documents', panel: wrapDocuments() },
    { id: 'anything', label: 'Chat With Anything', panel: anythingView.element },
  ]

  function wrapDocuments(): HTMLElement {
    const panel = document.createElement('div')
    panel.append(uploadView.element, chatView.element)
    return panel
  }

  const tabBar = document.createElement('nav')
  tabBar.className = 'tab-bar'
  const panels = document.createElement('main')
  for (const tab of tabs) {
    const button = document.createElement('button')
    button.className = 'tab-button'
    button.dataset.tab = tab.id
    button.textContent = tab.label
    button.addEventListener('click', () => session.setTab(tab.id))
    tabBar.append(button)
    tab.panel.classList.add('tab-panel')
    panels.append(tab.panel)
  }

  function render(): void {
    const haveKb = session.selectedKb !== null
    for (const tab of tabs) {
      tab.panel.classList.toggle('hidden', tab.id !== session.activeTab)
      tab.panel.classList.toggle('disabled', !haveKb)
    }
    for (const button of tabBar.querySelectorAll<HTMLButtonElement>('.tab-button')) {
      button.classList.toggle('active', button.dataset.tab === session.activeTab)
      button.disabled = !haveKb
    }
  }

  session.subscribe(render)
  root.append(picker.element, quickStart, tabBar, panels)
  render()
  void picker.refresh()
  client
    .health()
    .then((health) => anythingView.applyCapabilities(health))
    .catch(() => {
      /* picker banner already reports unreachable services */
    })
  return { session, client }
}

declare global {
  interface Window {
    SAGEKB_BASE_URL?: string
  }
}

if (typeof window !== 'undefined' && typeof document !== 'undefined') {
  const root = document.getElementById('app')
  if (root) {
    mountApp(root, window.SAGEKB_BASE_URL ?? '')
  }
}
