"""Duplex remote sensing and control platform for digital irrigation.

Simulates a field site (environment, transducer electronics, radio-linked
sensor nodes, base station) together with the operator-facing control server,
the on-site controller, and the planning analysis tools, in one deterministic
discrete-time process.
"""

__version__ = "0.1.0"
