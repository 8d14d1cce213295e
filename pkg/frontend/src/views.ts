/**
 * Pure view-model builders for the consensus and progress screens.
 *
 * Every consensus value shown comes from the service response verbatim;
 * nothing here recomputes majorities or tie-breaks.
 */

import type { ImageConsensus, Progress, SubjectConsensus, WorkItem } from './types';

export interface ImageRow {
  imageId: string;
  mgi: number;
  agreement: string;
  tied: boolean;
  siteSummaries: string[];
}

export interface ConsensusView {
  subjectId: string;
  mgi: number;
  imageCount: number;
  rows: ImageRow[];
}

function describeImage(image: ImageConsensus): ImageRow {
  const sites = Object.entries(image.sites)
    .filter(([, s]) => s.diseased)
    .map(([name, s]) => `${name} (${s.n_agree}/${s.n_annotators})`);
  return {
    imageId: image.image_id,
    mgi: image.mgi,
    agreement: `${image.n_agree}/${image.n_annotators}`,
    // no strict majority backed the winning score: the upward tie rule decided
    tied: image.n_agree * 2 <= image.n_annotators,
    siteSummaries: sites,
  };
}

export function consensusView(consensus: SubjectConsensus): ConsensusView {
  return {
    subjectId: consensus.subject_id,
    mgi: consensus.mgi,
    imageCount: consensus.n_images,
    rows: consensus.images.map(describeImage),
  };
}

export interface ProgressBar {
  annotator: string;
  fraction: number;
  percentLabel: string;
}

export function progressBars(progress: Progress): ProgressBar[] {
  return Object.entries(progress.annotators)
    .sort(([a], [b]) => a.localeCompare(b))
    .map(([annotator, fraction]) => ({
      annotator,
      fraction,
      percentLabel: `${Math.round(fraction * 100)}%`,
    }));
}

export interface QueueSummary {
  total: number;
  completed: number;
  nextImageId: string | null;
}

export function queueSummary(items: WorkItem[]): QueueSummary {
  const completed = items.filter((i) => i.completed).length;
  const next = items.find((i) => !i.completed);
  return {
    total: items.length,
    completed,
    nextImageId: next ? next.image_id : null,
  };
}
