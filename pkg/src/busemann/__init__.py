# busemann package
