/**
 * Annotation drafts: the in-progress state of one expert on one image.
 *
 * Drafts persist per (annotator, image) so an interrupted session resumes
 * exactly where it stopped, and every mutation pushes an undo snapshot.
 * A draft only becomes submittable once it validates against the service
 * schema, so the submit button can never send a rejectable payload.
 */

import type { AnnotationPayload, Mark, Point, Site } from './types';
import { IMAGE_HEIGHT, IMAGE_WIDTH, MGI_MAX, MGI_MIN, SITES } from './types';

export interface DraftState {
  mgi: number | null;
  marks: Mark[];
}

/** Minimal slice of the Web Storage API, injectable for tests. */
export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const emptyState = (): DraftState => ({ mgi: null, marks: [] });

const clone = (state: DraftState): DraftState => ({
  mgi: state.mgi,
  marks: state.marks.map((m) => ({ ...m, points: m.points.map((p) => [...p] as Point) })),
});

export function draftKey(annotatorId: string, imageId: string): string {
  return `periscreen-draft:${annotatorId}:${imageId}`;
}

export function validateDraft(state: DraftState): string[] {
  const problems: string[] = [];
  if (state.mgi === null) {
    problems.push('choose a severity score before submitting');
  } else if (!Number.isInteger(state.mgi) || state.mgi < MGI_MIN || state.mgi > MGI_MAX) {
    problems.push(`severity must be an integer in [${MGI_MIN}, ${MGI_MAX}]`);
  }
  const seen = new Set<Site>();
  for (const mark of state.marks) {
    if (!SITES.includes(mark.site)) problems.push(`unknown site ${mark.site}`);
    if (seen.has(mark.site)) problems.push(`duplicate mark for ${mark.site}`);
    seen.add(mark.site);
    if (mark.diseased && mark.points.length === 0) {
      problems.push(`${mark.site} is marked diseased but has no points`);
    }
    for (const [x, y] of mark.points) {
      if (x < 0 || x >= IMAGE_WIDTH || y < 0 || y >= IMAGE_HEIGHT) {
        problems.push(`point (${x}, ${y}) outside the ${IMAGE_WIDTH}x${IMAGE_HEIGHT} frame`);
      }
    }
  }
  return problems;
}

export class AnnotationDraft {
  private state: DraftState;
  private undoStack: DraftState[] = [];

  constructor(
    readonly annotatorId: string,
    readonly imageId: string,
    readonly subjectId: string,
    private readonly storage: KeyValueStore,
  ) {
    this.state = this.restore() ?? emptyState();
  }

  private restore(): DraftState | null {
    try {
      const raw = this.storage.getItem(draftKey(this.annotatorId, this.imageId));
      if (!raw) return null;
      return JSON.parse(raw) as DraftState;
    } catch (error) {
      console.warn('unable to restore draft', error);
      return null;
    }
  }

  private persist(): void {
    try {
      this.storage.setItem(
        draftKey(this.annotatorId, this.imageId),
        JSON.stringify(this.state),
      );
    } catch (error) {
      console.warn('unable to persist draft', error);
    }
  }

  private mutate(update: (state: DraftState) => void): void {
    this.undoStack.push(clone(this.state));
    update(this.state);
    this.persist();
  }

  get mgi(): number | null {
    return this.state.mgi;
  }

  get marks(): readonly Mark[] {
    return this.state.marks;
  }

  snapshot(): DraftState {
    return clone(this.state);
  }

  setMgi(mgi: number): void {
    this.mutate((s) => {
      s.mgi = mgi;
    });
  }

  /** Append one point to the site's chain, creating the mark on first use. */
  addPoint(site: Site, point: Point, diseased = true): void {
    this.mutate((s) => {
      const existing = s.marks.find((m) => m.site === site);
      if (existing) {
        existing.points.push(point);
        existing.diseased = existing.diseased || diseased;
      } else {
        s.marks.push({ site, points: [point], diseased });
      }
    });
  }

  setSiteDiseased(site: Site, diseased: boolean): void {
    this.mutate((s) => {
      const existing = s.marks.find((m) => m.site === site);
      if (existing) {
        existing.diseased = diseased;
      } else {
        s.marks.push({ site, points: [], diseased });
      }
    });
  }

  clearSite(site: Site): void {
    this.mutate((s) => {
      s.marks = s.marks.filter((m) => m.site !== site);
    });
  }

  undo(): boolean {
    const previous = this.undoStack.pop();
    if (!previous) return false;
    this.state = previous;
    this.persist();
    return true;
  }

  get canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  problems(): string[] {
    return validateDraft(this.state);
  }

  get submittable(): boolean {
    return this.problems().length === 0;
  }

  /** The exact payload the service will store; only valid drafts convert. */
  toPayload(): AnnotationPayload {
    const problems = this.problems();
    if (problems.length > 0) {
      throw new Error(`draft not submittable: ${problems.join('; ')}`);
    }
    return {
      image_id: this.imageId,
      subject_id: this.subjectId,
      annotator_id: this.annotatorId,
      mgi: this.state.mgi as number,
      marks: clone(this.state).marks.filter((m) => m.points.length > 0 || m.diseased),
    };
  }

  /** Drop the stored copy after a successful submission. */
  discard(): void {
    try {
      this.storage.removeItem(draftKey(this.annotatorId, this.imageId));
    } catch (error) {
      console.warn('unable to discard draft', error);
    }
    this.state = emptyState();
    this.undoStack = [];
  }
}
