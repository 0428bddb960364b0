// Grüße 😀 from the team
String s = "naïve";
int n = 1;
