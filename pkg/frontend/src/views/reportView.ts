// Research-report tab: submit a job, watch stage events live, render and
// download the finished markdown.

import { ReportJobStatus, SageKbClient } from '../api.js'
import { pollDelayMs, sleep } from '../backoff.js'
import { UiSession } from '../state.js'

const TERMINAL = new Set(['done', 'failed'])

export interface ReportView {
  element: HTMLElement
  submit(question: string, opts?: { nQueries?: number; topM?: number; arxiv?: boolean }): Promise<string>
  pollToCompletion(jobId: string): Promise<ReportJobStatus>
  observedStatuses(jobId: string): string[]
  downloadMarkdown(reportId: string): Promise<string>
}

export function createReportView(client: SageKbClient, session: UiSession): ReportView {
  const element = document.createElement('section')
  element.className = 'report-view'
  const form = document.createElement('form')
  const questionInput = document.createElement('input')
  questionInput.placeholder = 'research question...'
  const nQueriesInput = document.createElement('input')
  nQueriesInput.type = 'number'
  nQueriesInput.value = '3'
  const topMInput = document.createElement('input')
  topMInput.type = 'number'
  topMInput.value = '5'
  const arxivToggle = document.createElement('input')
  arxivToggle.type = 'checkbox'
  arxivToggle.id = 'arxiv-toggle'
  const arxivLabel = document.createElement('label')
  arxivLabel.htmlFor = 'arxiv-toggle'
  arxivLabel.textContent = 'search arXiv only'
  const submitButton = document.createElement('button')
  submitButton.textContent = 'Generate report'
  form.append(questionInput, nQueriesInput, topMInput, arxivToggle, arxivLabel, submitButton)

  const stageList = document.createElement('ol')
  stageList.className = 'stage-events'
  const reportPane = document.createElement('pre')
  reportPane.className = 'report-markdown'
  const downloadLink = document.createElement('a')
  downloadLink.className = 'download-link hidden'
  downloadLink.textContent = 'Download markdown'
  element.append(form, stageList, downloadLink, reportPane)

  const seenStatuses = new Map<string, string[]>()

  function renderStatus(status: ReportJobStatus): void {
    stageList.innerHTML = ''
    for (const event of status.events) {
      const item = document.createElement('li')
      item.className = `stage-event stage-${event.stage}`
      if (status.failed_stage && event.stage === status.failed_stage) {
        item.classList.add('stage-failed')
      }
      item.textContent = `[${event.stage}] ${event.detail}`
      stageList.append(item)
    }
    if (status.status === 'failed' && status.failed_stage) {
      const marker = document.createElement('li')
      marker.className = 'stage-event stage-failed failed-marker'
      marker.textContent = `failed at stage: ${status.failed_stage}`
      stageList.append(marker)
    }
  }

  async function submit(
    question: string,
    opts: { nQueries?: number; topM?: number; arxiv?: boolean } = {},
  ): Promise<string> {
    const kbId = session.selectedKb
    if (!kbId) throw new Error('no knowledge base selected')
    const { job_id } = await client.submitReport(kbId, {
      question,
      n_queries: opts.nQueries,
      top_m: opts.topM,
      source_mode: opts.arxiv ? 'arxiv' : 'web',
    })
    session.trackJob({ jobId: job_id, kbId, question, status: 'pending' })
    seenStatuses.set(job_id, [])
    return job_id
  }

  async function pollToCompletion(jobId: string): Promise<ReportJobStatus> {
    const job = session.inflightJobs().find((j) => j.jobId === jobId)
    if (!job) throw new Error(`unknown job ${jobId}`)
    const observed = seenStatuses.get(jobId) ?? []
    seenStatuses.set(jobId, observed)
    for (let attempt = 0; ; attempt++) {
      const status = await client.reportJobStatus(job.kbId, jobId)
      if (observed[observed.length - 1] !== status.status) observed.push(status.status)
      session.updateJobStatus(jobId, status.status)
      renderStatus(status)
      if (TERMINAL.has(status.status)) {
        if (status.status === 'done' && status.report_id) {
          downloadLink.classList.remove('hidden')
          downloadLink.dataset.reportId = status.report_id
        }
        return status
      }
      await sleep(pollDelayMs(attempt))
    }
  }

  async function downloadMarkdown(reportId: string): Promise<string> {
    const kbId = session.selectedKb
    if (!kbId) throw new Error('no knowledge base selected')
    const markdown = await client.downloadReport(kbId, reportId)
    reportPane.textContent = markdown
    return markdown
  }

  form.addEventListener('submit', (event) => {
    event.preventDefault()
    const question = questionInput.value.trim()
    if (!question) return
    void submit(question, {
      nQueries: Number(nQueriesInput.value) || undefined,
      topM: Number(topMInput.value) || undefined,
      arxiv: arxivToggle.checked,
    }).then((jobId) =>
      pollToCompletion(jobId).then((status) => {
        if (status.status === 'done' && status.report_id) {
          void downloadMarkdown(status.report_id)
        }
      }),
    )
  })

  return {
    element,
    submit,
    pollToCompletion,
    observedStatuses: (jobId: string) => seenStatuses.get(jobId) ?? [],
    downloadMarkdown,
  }
}
