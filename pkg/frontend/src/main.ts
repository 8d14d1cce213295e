/** Portal wiring: annotation screen plus consensus & progress screen. */

import { ServiceClient } from './api';
import { AnnotationDraft } from './draft';
import {
  IMAGE_HEIGHT,
  IMAGE_WIDTH,
  MGI_LABELS,
  SITE_LABELS,
  SITES,
  Site,
} from './types';
import { consensusView, progressBars, queueSummary } from './views';

const SITE_COLORS: Record<Site, string> = {
  gingival_margin: '#e4471d',
  left_papilla: '#1d7ae4',
  right_papilla: '#16a34a',
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

interface AppState {
  client: ServiceClient;
  annotatorId: string;
  draft: AnnotationDraft | null;
  activeSite: Site;
}

function subjectOf(imageId: string): string {
  // image ids follow "<subject>-imgN"; fall back to the id itself
  const dash = imageId.lastIndexOf('-');
  return dash > 0 ? imageId.slice(0, dash) : imageId;
}

async function renderQueue(state: AppState, root: HTMLElement): Promise<void> {
  root.replaceChildren();
  const items = await state.client.workQueue(state.annotatorId);
  const summary = queueSummary(items);
  root.appendChild(
    el('p', {}, `${summary.completed} of ${summary.total} images annotated`),
  );
  const list = el('ul', { class: 'queue' });
  for (const item of items) {
    const li = el('li', {}, `${item.image_id} ${item.completed ? '✓' : ''}`);
    li.classList.toggle('completed', item.completed);
    const open = el('button', {}, 'annotate');
    open.onclick = () => openAnnotation(state, item.image_id);
    li.appendChild(open);
    list.appendChild(li);
  }
  root.appendChild(list);
}

function drawMarks(state: AppState, canvas: HTMLCanvasElement): void {
  const ctx = canvas.getContext('2d');
  if (!ctx || !state.draft) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (const mark of state.draft.marks) {
    ctx.strokeStyle = ctx.fillStyle = SITE_COLORS[mark.site];
    ctx.lineWidth = 2;
    ctx.beginPath();
    mark.points.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
    ctx.stroke();
    for (const [x, y] of mark.points) {
      ctx.beginPath();
      ctx.arc(x, y, 4, 0, Math.PI * 2);
      ctx.fill();
    }
  }
}

function openAnnotation(state: AppState, imageId: string): void {
  const root = document.querySelector('#annotate') as HTMLElement;
  root.replaceChildren();
  state.draft = new AnnotationDraft(
    state.annotatorId,
    imageId,
    subjectOf(imageId),
    window.localStorage,
  );

  root.appendChild(el('h2', {}, `Image ${imageId}`));
  const banner = el('div', { class: 'banner', hidden: 'hidden' });
  root.appendChild(banner);

  const frame = el('div', { class: 'frame' });
  const img = el('img', {
    src: state.client.imageUrl(imageId),
    width: String(IMAGE_WIDTH),
    height: String(IMAGE_HEIGHT),
    alt: imageId,
  });
  const canvas = el('canvas', {
    width: String(IMAGE_WIDTH),
    height: String(IMAGE_HEIGHT),
  });
  frame.append(img, canvas);
  root.appendChild(frame);

  const tools = el('div', { class: 'tools' });
  for (const site of SITES) {
    const button = el('button', { 'data-site': site }, SITE_LABELS[site]);
    button.style.borderColor = SITE_COLORS[site];
    button.onclick = () => {
      state.activeSite = site;
      tools.querySelectorAll('button').forEach((b) => b.classList.remove('active'));
      button.classList.add('active');
    };
    tools.appendChild(button);
  }
  root.appendChild(tools);

  canvas.onclick = (event) => {
    if (!state.draft) return;
    const rect = canvas.getBoundingClientRect();
    const x = Math.min(
      IMAGE_WIDTH - 1,
      Math.max(0, ((event.clientX - rect.left) / rect.width) * IMAGE_WIDTH),
    );
    const y = Math.min(
      IMAGE_HEIGHT - 1,
      Math.max(0, ((event.clientY - rect.top) / rect.height) * IMAGE_HEIGHT),
    );
    state.draft.addPoint(state.activeSite, [Math.round(x), Math.round(y)]);
    drawMarks(state, canvas);
    refreshControls();
  };

  const mgiRow = el('div', { class: 'mgi' });
  mgiRow.appendChild(el('span', {}, 'Severity: '));
  const mgiButtons: HTMLButtonElement[] = [];
  for (let score = 0; score <= 5; score += 1) {
    const button = el('button', { title: MGI_LABELS[score] }, String(score));
    button.onclick = () => {
      state.draft?.setMgi(score);
      mgiButtons.forEach((b) => b.classList.remove('active'));
      button.classList.add('active');
      refreshControls();
    };
    mgiButtons.push(button);
    mgiRow.appendChild(button);
  }
  root.appendChild(mgiRow);

  const controls = el('div', { class: 'controls' });
  const undoButton = el('button', {}, 'undo');
  const submitButton = el('button', { class: 'submit' }, 'submit');
  const problems = el('p', { class: 'problems' });
  undoButton.onclick = () => {
    state.draft?.undo();
    drawMarks(state, canvas);
    refreshControls();
  };
  submitButton.onclick = async () => {
    if (!state.draft?.submittable) return;
    banner.hidden = true;
    try {
      await state.client.submitAnnotation(state.draft.toPayload());
      state.draft.discard();
      root.replaceChildren(el('p', {}, `Annotation for ${imageId} submitted.`));
      await renderQueue(state, document.querySelector('#queue') as HTMLElement);
    } catch (error) {
      // the draft stays in place; the expert retries when the service returns
      banner.textContent = `Submission failed (${String(error)}). Your draft is saved; retry when ready.`;
      banner.hidden = false;
    }
  };
  controls.append(undoButton, submitButton);
  root.append(controls, problems);

  const refreshControls = () => {
    if (!state.draft) return;
    const issues = state.draft.problems();
    submitButton.disabled = issues.length > 0;
    undoButton.disabled = !state.draft.canUndo;
    problems.textContent = issues.join('; ');
    const chosen = state.draft.mgi;
    mgiButtons.forEach((b, i) => b.classList.toggle('active', chosen === i));
  };

  drawMarks(state, canvas);
  refreshControls();
}

async function renderConsensus(state: AppState, root: HTMLElement, subjectId: string): Promise<void> {
  root.replaceChildren();
  if (!subjectId) {
    root.appendChild(el('p', {}, 'Enter a subject id to review consensus.'));
    return;
  }
  try {
    const view = consensusView(await state.client.consensus(subjectId));
    root.appendChild(
      el('h3', {}, `Subject ${view.subjectId}: severity ${view.mgi} over ${view.imageCount} image(s)`),
    );
    const list = el('ul');
    for (const row of view.rows) {
      const badge = row.tied ? ` [tie → ${row.mgi}]` : '';
      const sites = row.siteSummaries.length ? ` diseased: ${row.siteSummaries.join(', ')}` : '';
      list.appendChild(
        el('li', {}, `${row.imageId}: severity ${row.mgi} (${row.agreement})${badge}${sites}`),
      );
    }
    root.appendChild(list);
  } catch (error) {
    root.appendChild(el('p', {}, `No consensus available: ${String(error)}`));
  }
}

async function renderProgress(state: AppState, root: HTMLElement): Promise<void> {
  root.replaceChildren();
  const progress = await state.client.progress();
  const bars = progressBars(progress);
  if (bars.length === 0) {
    root.appendChild(el('p', {}, 'No annotations yet.'));
    return;
  }
  for (const bar of bars) {
    const row = el('div', { class: 'bar-row' });
    row.appendChild(el('span', {}, `${bar.annotator} ${bar.percentLabel}`));
    const track = el('div', { class: 'bar-track' });
    const fill = el('div', { class: 'bar-fill' });
    fill.style.width = `${Math.round(bar.fraction * 100)}%`;
    track.appendChild(fill);
    row.appendChild(track);
    root.appendChild(row);
  }
}

function install(): void {
  const app = document.querySelector('#app');
  if (!app) return;
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get('service') ?? 'http://127.0.0.1:8350';
  const state: AppState = {
    client: new ServiceClient(baseUrl),
    annotatorId: '',
    draft: null,
    activeSite: 'gingival_margin',
  };

  const login = el('div', { id: 'login' });
  const nameInput = el('input', { placeholder: 'annotator id' });
  const startButton = el('button', {}, 'start');
  login.append(nameInput, startButton);
  const queue = el('div', { id: 'queue' });
  const annotate = el('div', { id: 'annotate' });
  const consensusBox = el('div', { id: 'consensus' });
  const subjectInput = el('input', { placeholder: 'subject id' });
  const reviewButton = el('button', {}, 'review');
  const progressBox = el('div', { id: 'progress' });
  app.append(
    login,
    el('h2', {}, 'Work queue'),
    queue,
    annotate,
    el('h2', {}, 'Consensus'),
    subjectInput,
    reviewButton,
    consensusBox,
    el('h2', {}, 'Progress'),
    progressBox,
  );

  startButton.onclick = async () => {
    state.annotatorId = nameInput.value.trim();
    if (!state.annotatorId) return;
    await renderQueue(state, queue);
    await renderProgress(state, progressBox);
  };
  reviewButton.onclick = () => renderConsensus(state, consensusBox, subjectInput.value.trim());
}

install();
