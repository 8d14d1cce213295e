/** Shapes mirroring the annotation service's JSON schema. */

export const IMAGE_WIDTH = 640;
export const IMAGE_HEIGHT = 480;
export const MGI_MIN = 0;
export const MGI_MAX = 5;

export type Site = 'gingival_margin' | 'left_papilla' | 'right_papilla';

export const SITES: readonly Site[] = ['gingival_margin', 'left_papilla', 'right_papilla'];

export const SITE_LABELS: Record<Site, string> = {
  gingival_margin: 'Gingival margin',
  left_papilla: 'Left papilla',
  right_papilla: 'Right papilla',
};

/** Severity anchor descriptions shown next to the selector. */
export const MGI_LABELS: Record<number, string> = {
  0: '0 - healthy gingiva',
  1: '1',
  2: '2',
  3: '3',
  4: '4',
  5: '5 - severe periodontal disease',
};

export type Point = [number, number];

export interface Mark {
  site: Site;
  points: Point[];
  diseased: boolean;
}

export interface AnnotationPayload {
  image_id: string;
  subject_id: string;
  annotator_id: string;
  mgi: number;
  marks: Mark[];
}

export interface StoredAnnotation extends AnnotationPayload {
  timestamp: string | null;
}

export interface WorkItem {
  image_id: string;
  completed: boolean;
}

export interface SiteConsensus {
  diseased: boolean;
  n_annotators: number;
  n_agree: number;
}

export interface ImageConsensus {
  image_id: string;
  mgi: number;
  n_annotators: number;
  n_agree: number;
  sites: Record<string, SiteConsensus>;
}

export interface SubjectConsensus {
  subject_id: string;
  mgi: number;
  n_images: number;
  images: ImageConsensus[];
}

export interface Progress {
  n_images: number;
  annotators: Record<string, number>;
}
