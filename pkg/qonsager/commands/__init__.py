# This file makes commands a package
