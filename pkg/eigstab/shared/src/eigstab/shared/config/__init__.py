"""eigstab shared config package."""
