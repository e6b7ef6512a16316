/** Tracking page: class selection, job start/progress, annotated preview. */

import { ApiClient, ApiError } from './api.js';
import type { ViewState } from './state.js';
import type { ClassEntry, DrawCommand, JobStatus } from './types.js';

export interface TrackingView {
  renderClasses(entries: ClassEntry[], selected: Set<number>): void;
  renderLetterFilter(letters: string[], active: string | null): void;
  renderProgress(state: string, framesDone: number): void;
  renderNotice(kind: 'error' | 'warning' | 'info', text: string): void;
  clearNotice(): void;
  renderPreview(imageUrl: string, commands: DrawCommand[]): void;
}

const POLL_MS = 300;

export class TrackingController {
  private allClasses: ClassEntry[] = [];

  constructor(
    private api: ApiClient,
    private state: ViewState,
    private view: TrackingView,
    private sleep: (ms: number) => Promise<void> = (ms) => new Promise((r) => setTimeout(r, ms)),
  ) {}

  async load(): Promise<void> {
    const session = await this.api.session();
    if (session.subject_check.status === 'mismatch') {
      // The red note: selected files do not belong to the same subject.
      const pairs = Object.entries(session.subject_check.subjects)
        .map(([file, subject]) => `${file}: ${subject ?? '?'}`)
        .join(', ');
      this.view.renderNotice('warning', `Selected files are not from the same subject (${pairs})`);
    }
    this.allClasses = await this.api.classes();
    this.renderClassList();
  }

  private renderClassList(): void {
    const letters = [...new Set(this.allClasses.map((e) => e.class_name[0]!.toUpperCase()))].sort();
    this.view.renderLetterFilter(letters, this.state.letterFilter);
    const visible = this.state.letterFilter
      ? this.allClasses.filter((e) =>
          e.class_name.toLowerCase().startsWith(this.state.letterFilter!.toLowerCase()),
        )
      : this.allClasses;
    this.view.renderClasses(visible, this.state.selectedClassIds);
  }

  setLetterFilter(letter: string | null): void {
    this.state.letterFilter = letter;
    this.renderClassList();
  }

  toggleClass(classId: number, selected?: boolean): void {
    this.state.toggleClass(classId, selected);
    this.renderClassList();
  }

  /** Start tracking and poll until the job settles; returns final status. */
  async startTracking(options: { skipUngazed?: boolean; downsample?: number } = {}): Promise<JobStatus> {
    this.view.clearNotice();
    let jobId: string;
    try {
      const res = await this.api.startTracking({
        class_ids: [...this.state.selectedClassIds].sort((a, b) => a - b),
        skip_ungazed: options.skipUngazed ?? false,
        downsample: options.downsample ?? 1,
      });
      jobId = res.job_id;
    } catch (err) {
      this.showError(err);
      throw err;
    }
    this.state.activeJobId = jobId;

    let job = await this.api.job(jobId);
    while (job.state === 'queued' || job.state === 'running') {
      this.view.renderProgress(job.state, job.progress_frames);
      await this.sleep(POLL_MS);
      job = await this.api.job(jobId);
    }
    this.view.renderProgress(job.state, job.progress_frames);
    if (job.state === 'failed') {
      this.view.renderNotice('error', `Tracking failed: ${job.error ?? 'unknown error'}`);
    } else {
      await this.showPreview(0);
    }
    return job;
  }

  /** Paint one frame of the annotated preview (image + overlay commands). */
  async showPreview(frame: number): Promise<void> {
    const commands = await this.api.frameOverlay(frame);
    this.view.renderPreview(this.api.frameImageUrl(frame), commands);
  }

  private showError(err: unknown): void {
    if (err instanceof ApiError) {
      this.view.renderNotice('error', `${err.code}: ${err.message}`);
    } else {
      this.view.renderNotice('error', String(err));
    }
  }
}
