"""Integers on the prime grid: the number trail, its prime gaps, and random models.

Modules:

* ``signature``  -- prime signatures, norms, factorization, segmented norm sieve
* ``trail``      -- L_inf along the integers, prime stops, checkpointed runs
* ``gaps``       -- gap series on the number line and on the trail, histograms
* ``analytic``   -- zeta values, letter densities, constants
* ``words``      -- forbidden words and CRT localization of norm words
* ``shiftmodel`` -- exact Markov shifts avoiding eliminated words
* ``seqgen``     -- random forbidden-word-free sequences
* ``optimizer``  -- differential evolution for the inverse problem
* ``cli``        -- the ``primegrid`` command
"""

__version__ = "0.1.0"
