/** DOM bootstrap: wires the controllers to the actual page. */

import { ApiClient } from './api.js';
import { HOME_HTML } from './home.js';
import { LabellingController, type LabellingView, type ObjectRow } from './labelling.js';
import { COLORS, renderCommands } from './overlay.js';
import { ViewState, type Tab } from './state.js';
import { TrackingController, type TrackingView } from './tracking.js';
import type { ClassEntry, DrawCommand, KeyFrame } from './types.js';

const api = new ApiClient('');
const state = new ViewState();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function nameColorCss(color: 'green' | 'red'): string {
  return color === 'green' ? COLORS['green']! : COLORS['red']!;
}

async function paintFrame(canvas: HTMLCanvasElement, imageUrl: string, commands: DrawCommand[]) {
  const image = new Image();
  await new Promise<void>((resolve, reject) => {
    image.onload = () => resolve();
    image.onerror = () => reject(new Error(`cannot load ${imageUrl}`));
    image.src = imageUrl;
  });
  canvas.width = image.width;
  canvas.height = image.height;
  const ctx = canvas.getContext('2d')!;
  ctx.drawImage(image, 0, 0);
  renderCommands(ctx, commands);
}

// ----------------------------------------------------------- tracking view

const trackingView: TrackingView = {
  renderClasses(entries: ClassEntry[], selected: Set<number>) {
    const list = el<HTMLDivElement>('class-list');
    list.replaceChildren();
    for (const entry of entries) {
      const row = document.createElement('label');
      row.className = 'class-row';
      const box = document.createElement('input');
      box.type = 'checkbox';
      box.checked = selected.has(entry.class_id);
      box.addEventListener('change', () => tracking.toggleClass(entry.class_id, box.checked));
      row.append(box, document.createTextNode(` ${entry.class_name}`));
      list.append(row);
    }
  },
  renderLetterFilter(letters: string[], active: string | null) {
    const bar = el<HTMLDivElement>('letter-filter');
    bar.replaceChildren();
    const all = document.createElement('button');
    all.textContent = 'All';
    all.disabled = active === null;
    all.addEventListener('click', () => tracking.setLetterFilter(null));
    bar.append(all);
    for (const letter of letters) {
      const btn = document.createElement('button');
      btn.textContent = letter;
      btn.disabled = active === letter;
      btn.addEventListener('click', () => tracking.setLetterFilter(letter));
      bar.append(btn);
    }
  },
  renderProgress(jobState: string, framesDone: number) {
    el<HTMLSpanElement>('job-progress').textContent =
      jobState === 'done' ? `done (${framesDone} frames)` : `${jobState}: ${framesDone} frames`;
  },
  renderNotice(kind, text) {
    const notice = el<HTMLDivElement>('tracking-notice');
    notice.textContent = text;
    notice.className = `notice ${kind}`;
    notice.style.display = 'block';
  },
  clearNotice() {
    el<HTMLDivElement>('tracking-notice').style.display = 'none';
  },
  renderPreview(imageUrl, commands) {
    void paintFrame(el<HTMLCanvasElement>('preview-canvas'), imageUrl, commands);
  },
};

// ---------------------------------------------------------- labelling view

const labellingView: LabellingView = {
  renderKeyframe(kf: KeyFrame, index: number, count: number, imageUrl: string) {
    el<HTMLSpanElement>('kf-position').textContent =
      `key-frame ${index + 1}/${count} (frame ${kf.frame})`;
    void (async () => {
      const commands = await api.frameOverlay(kf.frame);
      await paintFrame(el<HTMLCanvasElement>('label-canvas'), imageUrl, commands);
    })();
  },
  renderObjects(rows: ObjectRow[]) {
    const list = el<HTMLDivElement>('object-list');
    list.replaceChildren();
    for (const row of rows) {
      const item = document.createElement('div');
      item.className = 'object-row';
      const name = document.createElement('span');
      name.textContent = row.className;
      name.style.color = nameColorCss(row.color);
      const input = document.createElement('input');
      input.type = 'text';
      input.placeholder = row.label ?? 'custom label';
      input.value = row.pending ?? '';
      input.addEventListener('input', () => labelling.setPendingLabel(row.trackId, input.value));
      input.addEventListener('keydown', (ev) => {
        if (ev.key === 'Enter' && input.value.trim()) {
          void labelling.submitLabel(row.trackId, input.value.trim());
        }
      });
      const current = document.createElement('span');
      current.className = 'current-label';
      current.textContent = row.label ? `= ${row.label}` : '';
      const error = document.createElement('span');
      error.className = 'field-error';
      error.id = `label-error-${row.trackId}`;
      item.append(name, input, current, error);
      list.append(item);
    }
  },
  renderNavState(prevEnabled: boolean, nextEnabled: boolean) {
    el<HTMLButtonElement>('kf-prev').disabled = !prevEnabled;
    el<HTMLButtonElement>('kf-next').disabled = !nextEnabled;
  },
  renderFieldError(trackId: number, message: string | null) {
    const node = document.getElementById(`label-error-${trackId}`);
    if (node) {
      node.textContent = message ?? '';
    }
  },
};

const tracking = new TrackingController(api, state, trackingView);
const labelling = new LabellingController(api, state, labellingView);

// ------------------------------------------------------------------- tabs

function showTab(tab: Tab) {
  state.switchTab(tab);
  for (const name of ['home', 'tracking', 'labelling'] as const) {
    el<HTMLDivElement>(`tab-${name}`).style.display = name === tab ? 'block' : 'none';
    el<HTMLButtonElement>(`tab-btn-${name}`).classList.toggle('active', name === tab);
  }
  if (tab === 'labelling') {
    void labelling.load();
  }
}

function wire() {
  el<HTMLDivElement>('tab-home').innerHTML = HOME_HTML;
  el<HTMLButtonElement>('tab-btn-home').addEventListener('click', () => showTab('home'));
  el<HTMLButtonElement>('tab-btn-tracking').addEventListener('click', () => showTab('tracking'));
  el<HTMLButtonElement>('tab-btn-labelling').addEventListener('click', () => showTab('labelling'));
  el<HTMLButtonElement>('start-tracking').addEventListener('click', () => {
    const skip = el<HTMLInputElement>('skip-ungazed').checked;
    void tracking.startTracking({ skipUngazed: skip });
  });
  el<HTMLButtonElement>('kf-prev').addEventListener('click', () => void labelling.previous());
  el<HTMLButtonElement>('kf-next').addEventListener('click', () => void labelling.next());

  void tracking.load().catch((err) => trackingView.renderNotice('error', String(err)));
  showTab('home');
}

wire();
