# services package