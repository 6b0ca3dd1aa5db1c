"""Message passing for locating a planted submatrix in a Gaussian matrix, and for biclustering."""
