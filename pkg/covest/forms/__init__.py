# Form package initialization
