"""rtlmut: mutation-based buggy RTL generation and assertion evaluation.

Pipeline: parse a Verilog-2005 subset, elaborate the hierarchy, inject
single faults with 17 syntactic mutation operators, filter duplicates and
behavioral equivalents by differential simulation, and score assertion sets
by syntax rate, simulation-based validation, structural cone-of-influence
coverage, and mutation kill ratio.
"""

__version__ = "0.1.0"
