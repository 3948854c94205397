# geodesics package
