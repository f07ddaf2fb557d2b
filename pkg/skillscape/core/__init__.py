"""Hierarchies, response simulation, clustering and the experiment grid."""
