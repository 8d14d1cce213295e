/** Typed client for the annotation service. The portal's only network path. */

import type {
  AnnotationPayload,
  Progress,
  StoredAnnotation,
  SubjectConsensus,
  WorkItem,
} from './types';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function parseError(response: Response): Promise<never> {
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (body.detail !== undefined) detail = JSON.stringify(body.detail);
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, detail);
}

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  workQueue(annotator: string): Promise<WorkItem[]> {
    return this.getJson(`/api/images?annotator=${encodeURIComponent(annotator)}`);
  }

  async submitAnnotation(payload: AnnotationPayload): Promise<StoredAnnotation> {
    const response = await this.fetchFn(`${this.baseUrl}/api/annotations`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(payload),
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as StoredAnnotation;
  }

  consensus(subjectId: string): Promise<SubjectConsensus> {
    return this.getJson(`/api/consensus/${encodeURIComponent(subjectId)}`);
  }

  progress(): Promise<Progress> {
    return this.getJson('/api/progress');
  }

  imageUrl(imageId: string): string {
    return `${this.baseUrl}/api/images/${encodeURIComponent(imageId)}/file`;
  }
}
