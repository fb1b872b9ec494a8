# Schemas package initialization file
