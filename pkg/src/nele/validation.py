"""Input validation helpers shared by the estimator classes and the DSP functions."""

import numpy as np

from .errors import EmptySignal, WrongSampleRate

SAMPLE_RATE = 16000


def as_signal(x, name="signal"):
    """Coerce to a finite 1-D float64 array.

    Raises EmptySignal on zero length and ValueError on non-finite samples
    or wrong dimensionality.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("%s must be 1-D (mono), got shape %s" % (name, (x.shape,)))
    if x.size == 0:
        raise EmptySignal("%s is empty" % name)
    if not np.all(np.isfinite(x)):
        raise ValueError("%s contains non-finite samples" % name)
    return x


def check_sample_rate(rate, name="signal"):
    if rate != SAMPLE_RATE:
        raise WrongSampleRate(
            "%s has sample rate %r, engine requires %d Hz" % (name, rate, SAMPLE_RATE)
        )


def signal_energy(x):
    x = np.asarray(x, dtype=np.float64)
    return float(np.dot(x, x))


def signal_rms(x):
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return 0.0
    return float(np.sqrt(np.mean(x * x)))
