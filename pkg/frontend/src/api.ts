/** Thin typed client over the service HTTP API.
 *
 * All analytics stay on the server: the client only fetches and renders.
 * Errors surface as ApiError carrying the service's {code, message} body
 * verbatim so pages can show it without rephrasing.
 */

import type {
  ClassEntry,
  DrawCommand,
  FrameObject,
  JobStatus,
  KeyFrame,
  SessionSummary,
  TrackRequest,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private base: string = '',
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) {
      let code = `HTTP${response.status}`;
      let message = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.code === 'string') {
          code = body.code;
          message = body.message ?? message;
        }
      } catch {
        // non-JSON error body: keep the status text
      }
      throw new ApiError(response.status, code, message);
    }
    if (response.status === 204) {
      return undefined as T;
    }
    return (await response.json()) as T;
  }

  session(): Promise<SessionSummary> {
    return this.request('/api/session');
  }

  classes(letter?: string): Promise<ClassEntry[]> {
    const query = letter ? `?letter=${encodeURIComponent(letter)}` : '';
    return this.request(`/api/classes${query}`);
  }

  startTracking(req: TrackRequest): Promise<{ job_id: string }> {
    return this.request('/api/jobs/track', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(req),
    });
  }

  job(jobId: string): Promise<JobStatus> {
    return this.request(`/api/jobs/${jobId}`);
  }

  keyframes(): Promise<KeyFrame[]> {
    return this.request('/api/keyframes');
  }

  frameObjects(frame: number): Promise<FrameObject[]> {
    return this.request(`/api/frames/${frame}/objects`);
  }

  frameOverlay(frame: number): Promise<DrawCommand[]> {
    return this.request(`/api/frames/${frame}/overlay`);
  }

  frameImageUrl(frame: number): string {
    return `${this.base}/api/frames/${frame}/image`;
  }

  putLabel(trackId: number, fromFrame: number, text: string): Promise<void> {
    return this.request(`/api/labels/${trackId}`, {
      method: 'PUT',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ from_frame: fromFrame, text }),
    });
  }

  deleteLabel(trackId: number, fromFrame: number): Promise<void> {
    return this.request(`/api/labels/${trackId}?from_frame=${fromFrame}`, {
      method: 'DELETE',
    });
  }
}
