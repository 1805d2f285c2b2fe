// Client-side session state. Nothing here is authoritative: a reload
// reconstructs KB lists, reports, and job statuses from the service.

export type Tab = 'report' | 'documents' | 'anything'

export interface TranscriptTurn {
  role: 'user' | 'assistant' | 'error'
  text: string
  mode?: string
  references?: { doc_id: string; source_name: string; chunk_id: string }[]
}

export interface TrackedJob {
  jobId: string
  kbId: string
  question: string
  status: string
}

export type Listener = () => void

export class UiSession {
  selectedKb: string | null = null
  activeTab: Tab = 'report'
  private transcripts = new Map<string, TranscriptTurn[]>()
  private jobs = new Map<string, TrackedJob>()
  private listeners = new Set<Listener>()

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener)
    return () => this.listeners.delete(listener)
  }

  private notify(): void {
    for (const listener of this.listeners) listener()
  }

  selectKb(kbId: string): void {
    this.selectedKb = kbId
    this.notify()
  }

  /** Called when the selected KB is deleted: selection clears, tabs disable,
   * but in-flight job tracking for other KBs is untouched. */
  clearSelection(): void {
    this.selectedKb = null
    this.notify()
  }

  kbDeleted(kbId: string): void {
    this.transcripts.delete(kbId)
    for (const [jobId, job] of [...this.jobs]) {
      if (job.kbId === kbId) this.jobs.delete(jobId)
    }
    if (this.selectedKb === kbId) this.clearSelection()
    else this.notify()
  }

  setTab(tab: Tab): void {
    // Tab switches must never lose in-flight job tracking.
    this.activeTab = tab
    this.notify()
  }

  transcript(kbId: string): TranscriptTurn[] {
    return this.transcripts.get(kbId) ?? []
  }

  appendTurn(kbId: string, turn: TranscriptTurn): void {
    const turns = this.transcripts.get(kbId) ?? []
    turns.push(turn)
    this.transcripts.set(kbId, turns)
    this.notify()
  }

  trackJob(job: TrackedJob): void {
    this.jobs.set(job.jobId, job)
    this.notify()
  }

  updateJobStatus(jobId: string, status: string): void {
    const job = this.jobs.get(jobId)
    if (job) {
      job.status = status
      this.notify()
    }
  }

  inflightJobs(): TrackedJob[] {
    return [...this.jobs.values()]
  }
}
