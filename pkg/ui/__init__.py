from .view import CommandLineView
