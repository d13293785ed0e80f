#include "ll/cle4.hpp"
