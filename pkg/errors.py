'''
Exception types. Messages carry the `Class::method()::` scope tag of the raiser.
'''

class SteinError(Exception):
	pass

class DomainError(SteinError, ValueError):
	'''
		Argument outside the region an inequality talks about, e.g. k < lambda
		for the right-tail statements.
	'''
	pass

class ExactModeLimitError(SteinError, ValueError):
	'''
		Exact enumeration or transfer-matrix size limit exceeded.
		Never answered by silently sampling instead.
	'''
	pass

class UsageError(SteinError):
	pass

class VerificationFailure(SteinError):
	pass
