import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from periscreen.annotations import subject_mgi_table
from periscreen.synthetic import build_reference_cohort


@pytest.fixture(scope="session")
def cohort_aligned():
    """Reference cohort whose condition counts follow the age-stratified views."""
    subjects, annotations = build_reference_cohort("cohort")
    return subjects, annotations, subject_mgi_table(annotations)


@pytest.fixture(scope="session")
def gender_aligned():
    """Reference cohort whose condition counts follow the gender-stratified views."""
    subjects, annotations = build_reference_cohort("gender")
    return subjects, annotations, subject_mgi_table(annotations)
