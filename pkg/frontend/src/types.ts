/** Payload shapes of the gaze2aoi service API. */

export interface SubjectCheck {
  status: 'ok' | 'mismatch';
  subjects: Record<string, string | null>;
}

export interface SessionSummary {
  session_id: string;
  subject_check: SubjectCheck;
  video: { fps: number; width_px: number; height_px: number; frame_count: number };
  gaze: { subject_id: string; samples: number; fixations: number; sample_rate_hz: number };
  detections: { rows: number; tracks: number[]; path: string; downsample_factor: number } | null;
  keyframes: number;
  labels: number;
}

export interface ClassEntry {
  class_id: number;
  class_name: string;
}

export interface TrackRequest {
  class_ids: number[];
  skip_ungazed?: boolean;
  downsample?: number;
}

export interface JobStatus {
  job_id: string;
  state: 'queued' | 'running' | 'done' | 'failed';
  progress_frames: number;
  output_path: string;
  class_ids: number[];
  downsample_factor: number;
  error: string | null;
  log: string[];
}

export interface KeyFrame {
  frame: number;
  classes: string[];
  track_ids: number[];
}

export interface FrameObject {
  track_id: number;
  class_name: string;
  gazed: boolean;
  fixated: boolean;
  effective_label: string | null;
}

export interface BoxGeometry {
  x_min: number;
  y_min: number;
  x_max: number;
  y_max: number;
}

export interface DotGeometry {
  cx: number;
  cy: number;
  radius: number;
}

export interface DrawCommand {
  kind: 'box' | 'dot' | 'text';
  color: 'green' | 'red' | 'purple';
  geometry: BoxGeometry | DotGeometry;
  caption: string | null;
}
