package com.example.app05;

public class Host {
    private int counter;

    public void onCreate() {
        counter = counter + 5;
        String title = "screen 5";
        System.out.println(title);
    }

    public void configure() {
        HostnameVerifier allowAll = new HostnameVerifier() {
            public boolean verify(String hostname, SSLSession session) {
                return true;
            }
        };
        HttpsURLConnection.setDefaultHostnameVerifier(allowAll);
    }

    public int compute(int a, int b) {
        int s = a * 7 + b;
        return s;
    }
}
