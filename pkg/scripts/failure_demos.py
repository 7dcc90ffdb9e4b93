"""Show the two ways rejection sampling goes wrong.

A density that is not Riemann integrable keeps the oracle undecided forever.
Bisecting before the acceptance test makes the output depend on values of f
on a finite grid.
"""

from bitsampler.cli import main

if __name__ == "__main__":
    for argv in (["demo", "cantor", "--delta", "0.2"], ["demo", "naive"]):
        main(argv)
