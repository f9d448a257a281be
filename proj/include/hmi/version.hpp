#pragma once

#define HMI_VERSION "0.1.0"
