"""Bounded timed window objectives: verification and game solving on timed automata."""
