"""Command line drivers for the eigstab experiments."""
