/** Labelling page: key-frame navigation, color-coded object names, label entry.
 *
 * Object names are green when the AOI holds the fixation point on that
 * key-frame and red when it was overlooked; both stay labelable.  Label
 * submission is optimistic with rollback on a server rejection.
 */

import { ApiClient, ApiError } from './api.js';
import type { ViewState } from './state.js';
import type { FrameObject, KeyFrame } from './types.js';

export type NameColor = 'green' | 'red';

export interface ObjectRow {
  trackId: number;
  className: string;
  color: NameColor;
  label: string | null;
  pending: string | null;
}

export interface LabellingView {
  renderKeyframe(kf: KeyFrame, index: number, count: number, imageUrl: string): void;
  renderObjects(rows: ObjectRow[]): void;
  renderNavState(prevEnabled: boolean, nextEnabled: boolean): void;
  renderFieldError(trackId: number, message: string | null): void;
}

export function objectColor(obj: FrameObject): NameColor {
  return obj.fixated ? 'green' : 'red';
}

export class LabellingController {
  private keyframes: KeyFrame[] = [];
  private objects: FrameObject[] = [];

  constructor(
    private api: ApiClient,
    private state: ViewState,
    private view: LabellingView,
  ) {}

  async load(): Promise<void> {
    this.keyframes = await this.api.keyframes();
    if (this.state.currentKeyframeIndex >= this.keyframes.length) {
      this.state.currentKeyframeIndex = 0;
    }
    await this.showCurrent();
  }

  get currentKeyframe(): KeyFrame | undefined {
    return this.keyframes[this.state.currentKeyframeIndex];
  }

  get currentRows(): ObjectRow[] {
    return this.objects.map((obj) => ({
      trackId: obj.track_id,
      className: obj.class_name,
      color: objectColor(obj),
      label: obj.effective_label,
      pending: this.state.pendingLabels.get(obj.track_id) ?? null,
    }));
  }

  private async showCurrent(): Promise<void> {
    const kf = this.currentKeyframe;
    if (!kf) {
      this.view.renderNavState(false, false);
      this.view.renderObjects([]);
      return;
    }
    const index = this.state.currentKeyframeIndex;
    this.objects = await this.api.frameObjects(kf.frame);
    this.view.renderKeyframe(kf, index, this.keyframes.length, this.api.frameImageUrl(kf.frame));
    this.view.renderObjects(this.currentRows);
    this.view.renderNavState(index > 0, index < this.keyframes.length - 1);
  }

  async next(): Promise<void> {
    if (this.state.currentKeyframeIndex < this.keyframes.length - 1) {
      this.state.currentKeyframeIndex += 1;
      await this.showCurrent();
    }
  }

  async previous(): Promise<void> {
    if (this.state.currentKeyframeIndex > 0) {
      this.state.currentKeyframeIndex -= 1;
      await this.showCurrent();
    }
  }

  setPendingLabel(trackId: number, text: string): void {
    this.state.setPendingLabel(trackId, text);
  }

  /** Optimistic submit: paint the label immediately, roll back on error. */
  async submitLabel(trackId: number, text: string): Promise<boolean> {
    const kf = this.currentKeyframe;
    if (!kf) {
      return false;
    }
    this.view.renderFieldError(trackId, null);
    const previous = this.objects.map((o) => ({ ...o }));
    this.objects = this.objects.map((o) =>
      o.track_id === trackId ? { ...o, effective_label: text } : o,
    );
    this.state.pendingLabels.delete(trackId);
    this.view.renderObjects(this.currentRows);
    try {
      await this.api.putLabel(trackId, kf.frame, text);
      return true;
    } catch (err) {
      this.objects = previous;
      this.state.setPendingLabel(trackId, text);
      this.view.renderObjects(this.currentRows);
      if (err instanceof ApiError) {
        this.view.renderFieldError(trackId, `${err.code}: ${err.message}`);
      } else {
        this.view.renderFieldError(trackId, String(err));
      }
      return false;
    }
  }
}
