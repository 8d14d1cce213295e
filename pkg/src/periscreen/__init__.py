"""Oral-systemic screening informatics pipeline.

Subpackages cover the full flow: domain records and categorical coding
(`model`), expert annotation aggregation (`annotations`), exact statistics
(`stats`), co-occurrence grids (`cooccurrence`), mask formats and
segmentation metrics (`masks`, `segmetrics`), ground-truth synthesis
(`masksynth`), dataset I/O and report regeneration (`dataio`, `reports`,
`synthetic`), the annotation HTTP service (`service`) and the CLI (`cli`).
"""

__version__ = "0.1.0"
