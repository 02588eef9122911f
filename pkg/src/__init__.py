"""
memanno
=======

LLM-assisted memory annotation generation for C code:
- Lightweight C function extraction and call graph construction
- Prompt-driven allocation/deallocation queries against an LLM backend
- Cooddy and CodeQL annotation emitters
- Precision/recall scoring against hand-labelled annotation sets
- A small annotation-driven leak checker
"""

__version__ = "0.1.0"
