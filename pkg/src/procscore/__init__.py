"""Process-conformance scoring of software projects from repository and issue data.

Subpackages and modules, bottom-up:

- ``mining``: commit records (size counters, density, keywords, sojourn) from git
- ``classification``: maintenance-activity classifiers (JCD, HMM, baselines)
- ``activity``: activity curves on normalized project time and process models
- ``deviations``: correlation, Jensen-Shannon and area deviations on segments
- ``scoring``: calibrated score transforms and the random-process simulation
- ``assessment``: feature vectors, small-data regressors, validation and reports
- ``cli``: the ``procscore`` command
"""

__version__ = "0.1.0"
